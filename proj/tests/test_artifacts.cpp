#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "acegan/artifacts.hpp"
#include "acegan/errors.hpp"
#include "acegan/gan.hpp"
#include "doctest.h"

using namespace acegan;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
    fs::path dir = fs::temp_directory_path() / "acegan_ckpt_tests";
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(f)),
                       std::istreambuf_iterator<char>());
}

void spit(const fs::path& p, const std::string& bytes) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    f.write(bytes.data(), std::streamsize(bytes.size()));
}

Tensor randn(Rng& rng, std::vector<int64_t> shape) {
    Tensor t(std::move(shape));
    for (double& x : t.data) x = rng.normal();
    return t;
}

}  // namespace

TEST_CASE("fnv-1a 64 matches the published test vectors") {
    CHECK(fnv1a64(std::string("")) == 0xcbf29ce484222325ull);
    CHECK(fnv1a64(std::string("a")) == 0xaf63dc4c8601ec8cull);
    CHECK(fnv1a64(std::string("foobar")) == 0x85944171f73967e8ull);
    // buffer overload agrees with the string one
    const char buf[] = {'f', 'o', 'o', 'b', 'a', 'r'};
    CHECK(fnv1a64(buf, sizeof buf) == fnv1a64(std::string("foobar")));
}

TEST_CASE("checkpoint container round trips arrays bit-exactly") {
    const fs::path path = scratch_dir() / "roundtrip.ckpt";
    std::vector<NamedArray> arrays;
    arrays.push_back({"alpha", {1}, {3.0}});
    arrays.push_back({"beta.w", {2, 3}, {0.0, -0.0, 1e-308, 3.141592653589793,
                                         -17.0, 1e300}});
    arrays.push_back({"gamma", {2, 1, 2}, {1.5, 2.5, -3.5, 4.5}});
    const uint64_t hash = 0xdeadbeefcafef00dull;

    write_checkpoint(path.string(), hash, arrays);
    Checkpoint ck = read_checkpoint(path.string());

    CHECK(ck.config_hash == hash);
    REQUIRE(ck.arrays.size() == arrays.size());
    for (size_t i = 0; i < arrays.size(); ++i) {
        CHECK(ck.arrays[i].name == arrays[i].name);
        CHECK(ck.arrays[i].shape == arrays[i].shape);
        REQUIRE(ck.arrays[i].data.size() == arrays[i].data.size());
        for (size_t k = 0; k < arrays[i].data.size(); ++k) {
            // bit-for-bit, so -0.0 and denormals survive
            CHECK(std::bit_cast<uint64_t>(ck.arrays[i].data[k]) ==
                  std::bit_cast<uint64_t>(arrays[i].data[k]));
        }
    }

    // the hash-checking reader accepts the right hash and rejects others
    CHECK(read_checkpoint(path.string(), hash).size() == arrays.size());
    CHECK_THROWS_AS(read_checkpoint(path.string(), hash + 1), MissingArtifact);
}

TEST_CASE("checkpoint reader rejects absent, corrupt and truncated files") {
    const fs::path dir = scratch_dir();

    CHECK_THROWS_AS(read_checkpoint((dir / "no_such.ckpt").string()),
                    MissingArtifact);

    const fs::path good = dir / "donor.ckpt";
    write_checkpoint(good.string(), 7, {{"x", {2, 2}, {1, 2, 3, 4}}});
    const std::string bytes = slurp(good);

    SUBCASE("bad magic") {
        std::string bad = bytes;
        bad[0] = 'Z';
        const fs::path p = dir / "badmagic.ckpt";
        spit(p, bad);
        CHECK_THROWS_AS(read_checkpoint(p.string()), MissingArtifact);
    }
    SUBCASE("unsupported version") {
        std::string bad = bytes;
        bad[8] = char(0xEE);
        const fs::path p = dir / "badver.ckpt";
        spit(p, bad);
        CHECK_THROWS_AS(read_checkpoint(p.string()), MissingArtifact);
    }
    SUBCASE("truncation anywhere in the tail") {
        for (size_t cut : {bytes.size() - 1, bytes.size() - 9,
                           bytes.size() - 17, size_t(30), size_t(12),
                           size_t(3)}) {
            const fs::path p = dir / "trunc.ckpt";
            spit(p, bytes.substr(0, cut));
            CHECK_THROWS_AS(read_checkpoint(p.string()), MissingArtifact);
        }
    }
    SUBCASE("implausible shape is refused rather than allocated") {
        // count=1 entry whose first dim is astronomically large
        std::string bad = bytes.substr(0, 28);      // magic+version+hash+count
        bad += char(1); bad += char(0); bad += char(0); bad += char(0);  // name len
        bad += 'x';
        bad += char(2); bad += char(0); bad += char(0); bad += char(0);  // rank
        for (int i = 0; i < 8; ++i) bad += char(0xFF);  // dim 0 = 2^64-1
        const fs::path p = dir / "hugeshape.ckpt";
        spit(p, bad);
        CHECK_THROWS_AS(read_checkpoint(p.string()), MissingArtifact);
    }
}

TEST_CASE("writer refuses an array whose payload disagrees with its shape") {
    const fs::path p = scratch_dir() / "misshapen.ckpt";
    CHECK_THROWS_AS(
        write_checkpoint(p.string(), 1, {{"x", {2, 2}, {1.0, 2.0, 3.0}}}),
        ShapeMismatch);
}

TEST_CASE("generator state restores into a differently-initialized net") {
    Rng rng_a(101), rng_b(202);
    Generator a(rng_a), b(rng_b);

    // push the running statistics away from their initial values
    Rng data_rng(7);
    Tensor z = randn(data_rng, {8, kNoiseDim});
    std::vector<int64_t> labels = {0, 1, 2, 3, 0, 1, 2, 3};
    for (int it = 0; it < 3; ++it) a.forward(z, labels, true);

    const fs::path p = scratch_dir() / "gen.ckpt";
    write_checkpoint(p.string(), 42, generator_state(a));
    load_generator(b, read_checkpoint(p.string(), 42));

    Tensor ya = a.forward(z, labels, false);
    Tensor yb = b.forward(z, labels, false);
    REQUIRE(ya.shape == yb.shape);
    CHECK(ya.data == yb.data);  // inference mode uses the running stats

    SUBCASE("a checkpoint missing one array is rejected") {
        std::vector<NamedArray> partial = generator_state(a);
        partial.pop_back();  // drops g.bn.run_var
        Generator c(rng_b);
        CHECK_THROWS_AS(load_generator(c, partial), MissingArtifact);
    }
    SUBCASE("a wrongly-shaped array is rejected") {
        std::vector<NamedArray> warped = generator_state(a);
        warped[0].shape = {warped[0].shape[0] + 1};
        warped[0].data.clear();
        int64_t n = 1;
        for (int64_t d : warped[0].shape) n *= d;
        warped[0].data.assign(size_t(n), 0.0);
        Generator c(rng_b);
        CHECK_THROWS_AS(load_generator(c, warped), ShapeMismatch);
    }
}

TEST_CASE("discriminator state restores into a differently-initialized net") {
    Rng rng_a(11), rng_b(22);
    Discriminator a(rng_a), b(rng_b);

    Rng data_rng(5);
    Tensor x = randn(data_rng, {3, 1, kCmSide, kCmSide});

    const fs::path p = scratch_dir() / "disc.ckpt";
    write_checkpoint(p.string(), 9, discriminator_state(a));
    load_discriminator(b, read_checkpoint(p.string(), 9));

    auto oa = a.forward(x, false);
    auto ob = b.forward(x, false);
    CHECK(oa.probs.data == ob.probs.data);
    CHECK(oa.validity.data == ob.validity.data);
    CHECK(oa.features.data == ob.features.data);
}

TEST_CASE("adam state round trip resumes training on the same trajectory") {
    // two identical nets; net A trains 5 steps, checkpoints after 3; net B
    // restores the step-3 state and must reproduce steps 4..5 exactly
    Rng init(33);
    Dense da(4, 3, Act::linear), db(4, 3, Act::linear);
    da.init(init, 0.5);
    db.w.data = da.w.data;
    db.b.data = da.b.data;

    Adam oa(da.params("net"), {});
    Adam ob(db.params("net"), {});

    Rng data_rng(77);
    std::vector<Tensor> xs, dys;
    for (int i = 0; i < 5; ++i) {
        xs.push_back(randn(data_rng, {6, 4}));
        dys.push_back(randn(data_rng, {6, 3}));
    }
    auto train_step = [](Dense& d, Adam& opt, const Tensor& x,
                         const Tensor& dy) {
        opt.zero_grad();
        d.forward(x);
        d.backward(dy);
        opt.step();
    };

    std::vector<NamedArray> mid_params, mid_opt;
    for (int i = 0; i < 5; ++i) {
        train_step(da, oa, xs[size_t(i)], dys[size_t(i)]);
        if (i == 2) {
            for (const ParamRef& pr : oa.params())
                mid_params.push_back(array_of(pr.name, *pr.t));
            mid_opt = adam_state("opt", oa);
        }
    }

    const fs::path p = scratch_dir() / "resume.ckpt";
    std::vector<NamedArray> all = mid_params;
    all.insert(all.end(), mid_opt.begin(), mid_opt.end());
    write_checkpoint(p.string(), 4, all);
    std::vector<NamedArray> restored = read_checkpoint(p.string(), 4);

    for (ParamRef& pr : db.params("net"))
        for (const NamedArray& a : restored)
            if (a.name == pr.name) load_into(a, *pr.t);
    load_adam(ob, "opt", restored);
    CHECK(ob.t == 3);

    for (int i = 3; i < 5; ++i) train_step(db, ob, xs[size_t(i)], dys[size_t(i)]);
    CHECK(da.w.data == db.w.data);
    CHECK(da.b.data == db.b.data);

    SUBCASE("optimizer state sized for a different net is rejected") {
        Dense other(4, 7, Act::linear);
        Adam oo(other.params("net"), {});
        CHECK_THROWS_AS(load_adam(oo, "opt", restored), MissingArtifact);
    }
    SUBCASE("a missing buffer is rejected") {
        std::vector<NamedArray> partial = restored;
        partial.erase(partial.end() - 1);
        Adam oc(db.params("net"), {});
        CHECK_THROWS_AS(load_adam(oc, "opt", partial), MissingArtifact);
    }
}
