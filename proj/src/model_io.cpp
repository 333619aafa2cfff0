#include "ircount/model_io.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "ircount/kernels.hpp"

namespace ircount {

namespace {

constexpr const char* kMagic = "IRCM1";

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::runtime_error(msg);
}

std::string hex8(uint32_t v) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%08x", v);
    return buf;
}

std::vector<uint8_t> tensor_bytes(const Tensor& t) {
    std::vector<uint8_t> out(t.data.size() * 4);
    std::memcpy(out.data(), t.data.data(), out.size());
    return out;
}

void tensor_from_bytes(Tensor& t, const std::vector<uint8_t>& bytes, const std::string& name) {
    require(bytes.size() == t.data.size() * 4, "model blob size mismatch: " + name);
    std::memcpy(t.data.data(), bytes.data(), bytes.size());
}

std::vector<uint8_t> i8_bytes(const std::vector<int8_t>& v) {
    return {reinterpret_cast<const uint8_t*>(v.data()), reinterpret_cast<const uint8_t*>(v.data()) + v.size()};
}

std::vector<uint8_t> i32_bytes(const std::vector<int32_t>& v) {
    std::vector<uint8_t> out(v.size() * 4);
    std::memcpy(out.data(), v.data(), out.size());
    return out;
}

std::vector<uint8_t> u32_bytes(const std::vector<uint32_t>& v) {
    std::vector<uint8_t> out(v.size() * 4);
    std::memcpy(out.data(), v.data(), out.size());
    return out;
}

SeedConfig config_from(const ModelFile& mf) {
    SeedConfig cfg;
    cfg.c1 = std::stoi(mf.get("c1"));
    cfg.c2 = std::stoi(mf.get("c2"));
    cfg.f1 = std::stoi(mf.get("f1"));
    cfg.classes = std::stoi(mf.get("classes"));
    cfg.in_h = std::stoi(mf.get("in_h"));
    cfg.in_w = std::stoi(mf.get("in_w"));
    cfg.with_bn = mf.get("with_bn") == "1";
    return cfg;
}

void put_config(ModelFile& mf, const SeedConfig& cfg) {
    mf.set("c1", std::to_string(cfg.c1));
    mf.set("c2", std::to_string(cfg.c2));
    mf.set("f1", std::to_string(cfg.f1));
    mf.set("classes", std::to_string(cfg.classes));
    mf.set("in_h", std::to_string(cfg.in_h));
    mf.set("in_w", std::to_string(cfg.in_w));
    mf.set("with_bn", cfg.with_bn ? "1" : "0");
}

void put_float_blobs(ModelFile& mf, const SeedNetwork& n) {
    mf.blobs.emplace_back("conv1.w", tensor_bytes(n.conv1.w));
    mf.blobs.emplace_back("conv1.b", tensor_bytes(n.conv1.b));
    if (n.cfg.with_bn) {
        mf.blobs.emplace_back("bn1.gamma", tensor_bytes(n.bn1.gamma));
        mf.blobs.emplace_back("bn1.beta", tensor_bytes(n.bn1.beta));
        mf.blobs.emplace_back("bn1.mean", tensor_bytes(n.bn1.running_mean));
        mf.blobs.emplace_back("bn1.var", tensor_bytes(n.bn1.running_var));
    }
    mf.blobs.emplace_back("conv2.w", tensor_bytes(n.conv2.w));
    mf.blobs.emplace_back("conv2.b", tensor_bytes(n.conv2.b));
    if (n.cfg.with_bn) {
        mf.blobs.emplace_back("bn2.gamma", tensor_bytes(n.bn2.gamma));
        mf.blobs.emplace_back("bn2.beta", tensor_bytes(n.bn2.beta));
        mf.blobs.emplace_back("bn2.mean", tensor_bytes(n.bn2.running_mean));
        mf.blobs.emplace_back("bn2.var", tensor_bytes(n.bn2.running_var));
    }
    mf.blobs.emplace_back("fc1.w", tensor_bytes(n.fc1.w));
    mf.blobs.emplace_back("fc1.b", tensor_bytes(n.fc1.b));
    mf.blobs.emplace_back("fc2.w", tensor_bytes(n.fc2.w));
    mf.blobs.emplace_back("fc2.b", tensor_bytes(n.fc2.b));
}

void read_float_blobs(const ModelFile& mf, SeedNetwork& net) {
    tensor_from_bytes(net.conv1.w, mf.blob("conv1.w"), "conv1.w");
    tensor_from_bytes(net.conv1.b, mf.blob("conv1.b"), "conv1.b");
    if (net.cfg.with_bn) {
        tensor_from_bytes(net.bn1.gamma, mf.blob("bn1.gamma"), "bn1.gamma");
        tensor_from_bytes(net.bn1.beta, mf.blob("bn1.beta"), "bn1.beta");
        tensor_from_bytes(net.bn1.running_mean, mf.blob("bn1.mean"), "bn1.mean");
        tensor_from_bytes(net.bn1.running_var, mf.blob("bn1.var"), "bn1.var");
    }
    tensor_from_bytes(net.conv2.w, mf.blob("conv2.w"), "conv2.w");
    tensor_from_bytes(net.conv2.b, mf.blob("conv2.b"), "conv2.b");
    if (net.cfg.with_bn) {
        tensor_from_bytes(net.bn2.gamma, mf.blob("bn2.gamma"), "bn2.gamma");
        tensor_from_bytes(net.bn2.beta, mf.blob("bn2.beta"), "bn2.beta");
        tensor_from_bytes(net.bn2.running_mean, mf.blob("bn2.mean"), "bn2.mean");
        tensor_from_bytes(net.bn2.running_var, mf.blob("bn2.var"), "bn2.var");
    }
    tensor_from_bytes(net.fc1.w, mf.blob("fc1.w"), "fc1.w");
    tensor_from_bytes(net.fc1.b, mf.blob("fc1.b"), "fc1.b");
    tensor_from_bytes(net.fc2.w, mf.blob("fc2.w"), "fc2.w");
    tensor_from_bytes(net.fc2.b, mf.blob("fc2.b"), "fc2.b");
}

}  // namespace

const std::string& ModelFile::get(const std::string& key) const {
    for (const auto& [k, v] : manifest) {
        if (k == key) return v;
    }
    throw std::runtime_error("model manifest key missing: " + key);
}

bool ModelFile::has(const std::string& key) const {
    for (const auto& [k, v] : manifest) {
        if (k == key) return true;
    }
    return false;
}

const std::vector<uint8_t>& ModelFile::blob(const std::string& name) const {
    for (const auto& [n, b] : blobs) {
        if (n == name) return b;
    }
    throw std::runtime_error("model blob missing: " + name);
}

uint32_t crc32(const uint8_t* data, size_t n) {
    static uint32_t table[256];
    static bool init = false;
    if (!init) {
        for (uint32_t i = 0; i < 256; ++i) {
            uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1u) != 0 ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            table[i] = c;
        }
        init = true;
    }
    uint32_t c = 0xFFFFFFFFu;
    for (size_t i = 0; i < n; ++i) c = table[(c ^ data[i]) & 0xFFu] ^ (c >> 8);
    return c ^ 0xFFFFFFFFu;
}

std::string double_to_hex(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%a", v);
    return buf;
}

double hex_to_double(const std::string& s) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    require(end != nullptr && *end == '\0', "bad hexfloat in manifest: " + s);
    return v;
}

void write_model_file(const std::string& path, const ModelFile& mf) {
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), "cannot write model file: " + path);
    out << kMagic << "\n";
    std::string man;
    for (const auto& [k, v] : mf.manifest) man += k + "=" + v + "\n";
    out << "manifest " << man.size() << "\n" << man;
    for (const auto& [name, bytes] : mf.blobs) {
        out << "blob " << name << " " << bytes.size() << " " << hex8(crc32(bytes.data(), bytes.size())) << "\n";
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        out << "\n";
    }
    out << "end\n";
    require(static_cast<bool>(out), "write failed: " + path);
}

ModelFile read_model_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), "cannot open model file: " + path);
    std::string line;
    require(static_cast<bool>(std::getline(in, line)) && line == kMagic,
            "model format/version mismatch in " + path);
    ModelFile mf;
    require(static_cast<bool>(std::getline(in, line)) && line.rfind("manifest ", 0) == 0,
            "missing manifest in " + path);
    const size_t man_len = std::stoull(line.substr(9));
    std::string man(man_len, '\0');
    in.read(man.data(), static_cast<std::streamsize>(man_len));
    require(static_cast<bool>(in), "truncated manifest in " + path);
    size_t pos = 0;
    while (pos < man.size()) {
        size_t nl = man.find('\n', pos);
        if (nl == std::string::npos) nl = man.size();
        const std::string kv = man.substr(pos, nl - pos);
        pos = nl + 1;
        if (kv.empty()) continue;
        const size_t eq = kv.find('=');
        require(eq != std::string::npos, "malformed manifest line: " + kv);
        mf.manifest.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
    }
    while (std::getline(in, line)) {
        if (line == "end") return mf;
        if (line.empty()) continue;
        require(line.rfind("blob ", 0) == 0, "malformed blob header: " + line);
        const size_t sp1 = line.find(' ', 5);
        const size_t sp2 = line.find(' ', sp1 + 1);
        require(sp1 != std::string::npos && sp2 != std::string::npos, "malformed blob header: " + line);
        const std::string name = line.substr(5, sp1 - 5);
        const size_t len = std::stoull(line.substr(sp1 + 1, sp2 - sp1 - 1));
        const std::string crc_hex = line.substr(sp2 + 1);
        std::vector<uint8_t> bytes(len);
        in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(len));
        require(static_cast<bool>(in), "truncated blob: " + name);
        char nl = 0;
        in.get(nl);
        require(nl == '\n', "malformed blob framing: " + name);
        require(hex8(crc32(bytes.data(), bytes.size())) == crc_hex, "checksum failure in blob " + name);
        mf.blobs.emplace_back(name, std::move(bytes));
    }
    throw std::runtime_error("missing end marker in " + path);
}

std::string model_stage(const std::string& path) { return read_model_file(path).get("stage"); }

void save_float_model(const std::string& path, const SeedNetwork& net, const ManifestExtra& extra) {
    ModelFile mf;
    mf.set("format", "ircm");
    mf.set("stage", "float");
    put_config(mf, net.cfg);
    for (const auto& [k, v] : extra) mf.set(k, v);
    put_float_blobs(mf, net);
    write_model_file(path, mf);
}

SeedNetwork load_float_model(const std::string& path) {
    const ModelFile mf = read_model_file(path);
    require(mf.get("stage") == "float", "expected a float-stage model: " + path);
    SeedNetwork net(config_from(mf));
    read_float_blobs(mf, net);
    return net;
}

void save_nas_model(const std::string& path, const MaskedNetwork& mnet, double lambda, uint64_t seed,
                    const ManifestExtra& extra) {
    ModelFile mf;
    mf.set("format", "ircm");
    mf.set("stage", "nas");
    put_config(mf, mnet.net.cfg);
    mf.set("lambda", double_to_hex(lambda));
    mf.set("seed", std::to_string(seed));
    for (const auto& [k, v] : extra) mf.set(k, v);
    put_float_blobs(mf, mnet.net);
    mf.blobs.emplace_back("mask.theta1", tensor_bytes(mnet.theta1));
    mf.blobs.emplace_back("mask.theta2", tensor_bytes(mnet.theta2));
    mf.blobs.emplace_back("mask.theta3", tensor_bytes(mnet.theta3));
    write_model_file(path, mf);
}

MaskedNetwork load_nas_model(const std::string& path) {
    const ModelFile mf = read_model_file(path);
    require(mf.get("stage") == "nas", "expected a nas-stage model: " + path);
    SeedNetwork net(config_from(mf));
    read_float_blobs(mf, net);
    MaskedNetwork mnet(net);
    tensor_from_bytes(mnet.theta1, mf.blob("mask.theta1"), "mask.theta1");
    tensor_from_bytes(mnet.theta2, mf.blob("mask.theta2"), "mask.theta2");
    tensor_from_bytes(mnet.theta3, mf.blob("mask.theta3"), "mask.theta3");
    return mnet;
}

void save_qat_model(const std::string& path, const QatNetwork& qnet, const ManifestExtra& extra) {
    ModelFile mf;
    mf.set("format", "ircm");
    mf.set("stage", "qat");
    put_config(mf, qnet.net.cfg);
    mf.set("spec", qnet.spec.to_string());
    for (int i = 0; i < 5; ++i) {
        const auto& q = qnet.acts[i];
        const std::string p = "q" + std::to_string(i);
        mf.set(p + ".alpha", double_to_hex(q.alpha));
        mf.set(p + ".beta", double_to_hex(q.beta));
        mf.set(p + ".bits", std::to_string(q.bits));
    }
    for (const auto& [k, v] : extra) mf.set(k, v);
    put_float_blobs(mf, qnet.net);
    write_model_file(path, mf);
}

QatNetwork load_qat_model(const std::string& path) {
    const ModelFile mf = read_model_file(path);
    require(mf.get("stage") == "qat", "expected a qat-stage model: " + path);
    SeedNetwork net(config_from(mf));
    read_float_blobs(mf, net);
    QatNetwork qnet(net, QuantSpec::from_string(mf.get("spec")));
    for (int i = 0; i < 5; ++i) {
        const std::string p = "q" + std::to_string(i);
        qnet.acts[i].alpha = static_cast<float>(hex_to_double(mf.get(p + ".alpha")));
        qnet.acts[i].beta = static_cast<float>(hex_to_double(mf.get(p + ".beta")));
        require(std::stoi(mf.get(p + ".bits")) == qnet.acts[i].bits, "quantizer width mismatch in " + path);
        qnet.acts[i].calibrated = true;
    }
    return qnet;
}

namespace {

void put_int_layer(ModelFile& mf, const QuantLayerInt& L) {
    const std::string p = L.name;
    mf.set(p + ".kind", L.kind == QuantLayerInt::Kind::kConv ? "conv" : "fc");
    mf.set(p + ".cin", std::to_string(L.cin));
    mf.set(p + ".cout", std::to_string(L.cout));
    mf.set(p + ".k", std::to_string(L.k));
    mf.set(p + ".pad", std::to_string(L.pad));
    mf.set(p + ".h_in", std::to_string(L.h_in));
    mf.set(p + ".w_in", std::to_string(L.w_in));
    mf.set(p + ".up_channels", std::to_string(L.up_channels));
    mf.set(p + ".up_spatial", std::to_string(L.up_spatial));
    mf.set(p + ".width", std::to_string(L.width));
    mf.set(p + ".out_width", std::to_string(L.out_width));
    mf.set(p + ".relu", L.relu ? "1" : "0");
    mf.set(p + ".mult", std::to_string(L.mult));
    mf.set(p + ".shift", std::to_string(L.shift));
    mf.set(p + ".zp_in", std::to_string(L.zp_in));
    mf.set(p + ".zp_out", std::to_string(L.zp_out));
    mf.set(p + ".s_w", double_to_hex(L.s_w));
    mf.set(p + ".s_in", double_to_hex(L.s_in));
    mf.set(p + ".s_out", double_to_hex(L.s_out));
    mf.blobs.emplace_back(p + ".codes", i8_bytes(L.w));
    mf.blobs.emplace_back(p + ".bias", i32_bytes(L.bias_q));
    mf.blobs.emplace_back(p + ".packed", u32_bytes(kern::pack_weight_blob(L)));
}

QuantLayerInt read_int_layer(const ModelFile& mf, const std::string& p) {
    QuantLayerInt L;
    L.name = p;
    L.kind = mf.get(p + ".kind") == "conv" ? QuantLayerInt::Kind::kConv : QuantLayerInt::Kind::kFc;
    L.cin = std::stoi(mf.get(p + ".cin"));
    L.cout = std::stoi(mf.get(p + ".cout"));
    L.k = std::stoi(mf.get(p + ".k"));
    L.pad = std::stoi(mf.get(p + ".pad"));
    L.h_in = std::stoi(mf.get(p + ".h_in"));
    L.w_in = std::stoi(mf.get(p + ".w_in"));
    L.up_channels = std::stoi(mf.get(p + ".up_channels"));
    L.up_spatial = std::stoi(mf.get(p + ".up_spatial"));
    L.width = std::stoi(mf.get(p + ".width"));
    L.out_width = std::stoi(mf.get(p + ".out_width"));
    L.relu = mf.get(p + ".relu") == "1";
    L.mult = std::stoi(mf.get(p + ".mult"));
    L.shift = std::stoi(mf.get(p + ".shift"));
    L.zp_in = std::stoi(mf.get(p + ".zp_in"));
    L.zp_out = std::stoi(mf.get(p + ".zp_out"));
    L.s_w = hex_to_double(mf.get(p + ".s_w"));
    L.s_in = hex_to_double(mf.get(p + ".s_in"));
    L.s_out = hex_to_double(mf.get(p + ".s_out"));
    const auto& codes = mf.blob(p + ".codes");
    L.w.assign(reinterpret_cast<const int8_t*>(codes.data()),
               reinterpret_cast<const int8_t*>(codes.data()) + codes.size());
    const auto& bias = mf.blob(p + ".bias");
    require(bias.size() % 4 == 0, "bad bias blob in " + p);
    L.bias_q.resize(bias.size() / 4);
    std::memcpy(L.bias_q.data(), bias.data(), bias.size());
    // the packed blob is normative: verify it matches the loaded codes
    const auto& packed = mf.blob(p + ".packed");
    const std::vector<uint32_t> expect = kern::pack_weight_blob(L);
    require(packed.size() == expect.size() * 4 &&
                std::memcmp(packed.data(), expect.data(), packed.size()) == 0,
            "packed weight blob inconsistent with codes in " + p);
    return L;
}

}  // namespace

void save_int_model(const std::string& path, const QuantizedNetwork& qnet, const ManifestExtra& extra) {
    ModelFile mf;
    mf.set("format", "ircm");
    mf.set("stage", "int");
    put_config(mf, qnet.cfg);
    mf.set("spec", qnet.spec.to_string());
    mf.set("input.scale", double_to_hex(qnet.input.scale));
    mf.set("input.zp", std::to_string(qnet.input.zp));
    mf.set("input.width", std::to_string(qnet.input.width));
    for (const auto& [k, v] : extra) mf.set(k, v);
    for (const QuantLayerInt* l : {&qnet.conv1, &qnet.conv2, &qnet.fc1, &qnet.fc2}) put_int_layer(mf, *l);
    write_model_file(path, mf);
}

QuantizedNetwork load_int_model(const std::string& path) {
    const ModelFile mf = read_model_file(path);
    require(mf.get("stage") == "int", "expected an int-stage model: " + path);
    QuantizedNetwork qnet;
    qnet.cfg = config_from(mf);
    qnet.spec = QuantSpec::from_string(mf.get("spec"));
    qnet.input.scale = hex_to_double(mf.get("input.scale"));
    qnet.input.zp = std::stoi(mf.get("input.zp"));
    qnet.input.width = std::stoi(mf.get("input.width"));
    qnet.conv1 = read_int_layer(mf, "conv1");
    qnet.conv2 = read_int_layer(mf, "conv2");
    qnet.fc1 = read_int_layer(mf, "fc1");
    qnet.fc2 = read_int_layer(mf, "fc2");
    return qnet;
}

}  // namespace ircount
