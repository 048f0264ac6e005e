#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "acegan/adam.hpp"
#include "acegan/gan.hpp"

namespace acegan {

// 64-bit FNV-1a; stamps every artifact so stages can refuse mixed-config runs
uint64_t fnv1a64(const void* bytes, size_t n);
uint64_t fnv1a64(const std::string& s);

struct NamedArray {
    std::string name;
    std::vector<int64_t> shape;
    std::vector<double> data;
};

struct Checkpoint {
    uint64_t config_hash = 0;
    std::vector<NamedArray> arrays;
};

// Binary container: magic, version, config hash, array count; per array the
// name, rank, shape and a little-endian f64 payload.
void write_checkpoint(const std::string& path, uint64_t config_hash,
                      const std::vector<NamedArray>& arrays);
Checkpoint read_checkpoint(const std::string& path);
// throws MissingArtifact when the file is absent, malformed or carries a
// different config hash
std::vector<NamedArray> read_checkpoint(const std::string& path,
                                        uint64_t expected_hash);

NamedArray array_of(const std::string& name, const Tensor& t);
// shape-checked restore
void load_into(const NamedArray& a, Tensor& t);

// Full trainable state. Generator state includes the batch-norm running
// statistics, which params() deliberately leaves out of the optimizer's view.
std::vector<NamedArray> generator_state(Generator& g);
std::vector<NamedArray> discriminator_state(Discriminator& d);
std::vector<NamedArray> adam_state(const std::string& prefix, const Adam& opt);

void load_generator(Generator& g, const std::vector<NamedArray>& arrays);
void load_discriminator(Discriminator& d, const std::vector<NamedArray>& arrays);
void load_adam(Adam& opt, const std::string& prefix,
               const std::vector<NamedArray>& arrays);

}  // namespace acegan
