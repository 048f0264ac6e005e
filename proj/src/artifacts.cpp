#include "acegan/artifacts.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>

namespace acegan {

uint64_t fnv1a64(const void* bytes, size_t n) {
    const auto* p = static_cast<const uint8_t*>(bytes);
    uint64_t h = 0xcbf29ce484222325ull;
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

namespace {

constexpr char kMagic[8] = {'A', 'C', 'E', 'G', 'A', 'N', 'C', 'K'};
constexpr uint32_t kVersion = 1;
constexpr int64_t kMaxRank = 8;
constexpr int64_t kMaxElems = 1ll << 30;

void put_u32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(char((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& out, double d) {
    put_u64(out, std::bit_cast<uint64_t>(d));
}

struct Reader {
    const std::string& buf;
    size_t at = 0;
    const std::string& path;

    void need(size_t n) const {
        if (at + n > buf.size())
            throw MissingArtifact("truncated checkpoint: " + path);
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= uint32_t(uint8_t(buf[at + size_t(i)])) << (8 * i);
        at += 4;
        return v;
    }
    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= uint64_t(uint8_t(buf[at + size_t(i)])) << (8 * i);
        at += 8;
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string bytes(size_t n) {
        need(n);
        std::string s = buf.substr(at, n);
        at += n;
        return s;
    }
};

}  // namespace

void write_checkpoint(const std::string& path, uint64_t config_hash,
                      const std::vector<NamedArray>& arrays) {
    std::string out;
    out.append(kMagic, sizeof kMagic);
    put_u32(out, kVersion);
    put_u64(out, config_hash);
    put_u64(out, arrays.size());
    for (const NamedArray& a : arrays) {
        put_u32(out, uint32_t(a.name.size()));
        out += a.name;
        put_u32(out, uint32_t(a.shape.size()));
        int64_t numel = 1;
        for (int64_t d : a.shape) {
            put_u64(out, uint64_t(d));
            numel *= d;
        }
        if (numel != int64_t(a.data.size()))
            throw ShapeMismatch("array " + a.name + " payload size " +
                                std::to_string(a.data.size()) +
                                " does not match its shape");
        for (double d : a.data) put_f64(out, d);
    }
    const std::filesystem::path parent =
        std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw MissingArtifact("cannot write checkpoint: " + path);
    f.write(out.data(), std::streamsize(out.size()));
    if (!f) throw MissingArtifact("short write on checkpoint: " + path);
}

Checkpoint read_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw MissingArtifact("checkpoint not found: " + path);
    std::string buf((std::istreambuf_iterator<char>(f)),
                    std::istreambuf_iterator<char>());
    Reader r{buf, 0, path};

    if (r.bytes(sizeof kMagic) != std::string(kMagic, sizeof kMagic))
        throw MissingArtifact("not a checkpoint file: " + path);
    const uint32_t version = r.u32();
    if (version != kVersion)
        throw MissingArtifact("unsupported checkpoint version " +
                              std::to_string(version) + ": " + path);

    Checkpoint ck;
    ck.config_hash = r.u64();
    const uint64_t count = r.u64();
    for (uint64_t i = 0; i < count; ++i) {
        NamedArray a;
        a.name = r.bytes(r.u32());
        const uint32_t rank = r.u32();
        if (rank > kMaxRank)
            throw MissingArtifact("implausible array rank in " + path);
        int64_t numel = 1;
        for (uint32_t k = 0; k < rank; ++k) {
            const int64_t d = int64_t(r.u64());
            if (d < 0 || d > kMaxElems || numel > kMaxElems / std::max<int64_t>(d, 1))
                throw MissingArtifact("implausible array shape in " + path);
            a.shape.push_back(d);
            numel *= d;
        }
        a.data.resize(size_t(numel));
        for (int64_t k = 0; k < numel; ++k) a.data[size_t(k)] = r.f64();
        ck.arrays.push_back(std::move(a));
    }
    return ck;
}

std::vector<NamedArray> read_checkpoint(const std::string& path,
                                        uint64_t expected_hash) {
    Checkpoint ck = read_checkpoint(path);
    if (ck.config_hash != expected_hash)
        throw MissingArtifact(
            "checkpoint " + path +
            " was produced under a different configuration");
    return std::move(ck.arrays);
}

NamedArray array_of(const std::string& name, const Tensor& t) {
    return {name, t.shape, t.data};
}

void load_into(const NamedArray& a, Tensor& t) {
    if (a.shape != t.shape)
        throw ShapeMismatch("array " + a.name + " has shape incompatible " +
                            "with its destination");
    t.data = a.data;
}

namespace {

std::vector<NamedArray> param_arrays(const std::vector<ParamRef>& params) {
    std::vector<NamedArray> out;
    for (const ParamRef& p : params) out.push_back(array_of(p.name, *p.t));
    return out;
}

void load_params(const std::vector<ParamRef>& params,
                 const std::vector<NamedArray>& arrays) {
    std::map<std::string, const NamedArray*> by_name;
    for (const NamedArray& a : arrays) by_name[a.name] = &a;
    for (const ParamRef& p : params) {
        auto it = by_name.find(p.name);
        if (it == by_name.end())
            throw MissingArtifact("checkpoint lacks array " + p.name);
        load_into(*it->second, *p.t);
    }
}

const NamedArray& find_array(const std::vector<NamedArray>& arrays,
                             const std::string& name) {
    for (const NamedArray& a : arrays)
        if (a.name == name) return a;
    throw MissingArtifact("checkpoint lacks array " + name);
}

}  // namespace

std::vector<NamedArray> generator_state(Generator& g) {
    std::vector<NamedArray> out = param_arrays(g.params());
    out.push_back(array_of("g.bn.run_mean", g.bn.run_mean));
    out.push_back(array_of("g.bn.run_var", g.bn.run_var));
    return out;
}

std::vector<NamedArray> discriminator_state(Discriminator& d) {
    return param_arrays(d.params());
}

std::vector<NamedArray> adam_state(const std::string& prefix,
                                   const Adam& opt) {
    std::vector<NamedArray> out;
    out.push_back({prefix + ".t",
                   {1},
                   {static_cast<double>(opt.t)}});
    for (size_t i = 0; i < opt.m.size(); ++i) {
        out.push_back({prefix + ".m." + std::to_string(i),
                       {int64_t(opt.m[i].size())},
                       opt.m[i]});
        out.push_back({prefix + ".v." + std::to_string(i),
                       {int64_t(opt.v[i].size())},
                       opt.v[i]});
    }
    return out;
}

void load_generator(Generator& g, const std::vector<NamedArray>& arrays) {
    load_params(g.params(), arrays);
    load_into(find_array(arrays, "g.bn.run_mean"), g.bn.run_mean);
    load_into(find_array(arrays, "g.bn.run_var"), g.bn.run_var);
}

void load_discriminator(Discriminator& d,
                        const std::vector<NamedArray>& arrays) {
    load_params(d.params(), arrays);
}

void load_adam(Adam& opt, const std::string& prefix,
               const std::vector<NamedArray>& arrays) {
    const NamedArray& t = find_array(arrays, prefix + ".t");
    if (t.data.size() != 1)
        throw MissingArtifact("malformed optimizer step count");
    opt.t = int64_t(std::llround(t.data[0]));
    for (size_t i = 0; i < opt.m.size(); ++i) {
        const NamedArray& m = find_array(arrays,
                                         prefix + ".m." + std::to_string(i));
        const NamedArray& v = find_array(arrays,
                                         prefix + ".v." + std::to_string(i));
        if (m.data.size() != opt.m[i].size() ||
            v.data.size() != opt.v[i].size())
            throw MissingArtifact("optimizer state does not fit the network");
        opt.m[i] = m.data;
        opt.v[i] = v.data;
    }
}

}  // namespace acegan
