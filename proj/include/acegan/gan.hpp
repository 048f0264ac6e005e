#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "acegan/adam.hpp"
#include "acegan/beatgrid.hpp"
#include "acegan/layers.hpp"
#include "acegan/losses.hpp"
#include "acegan/rng.hpp"
#include "acegan/tensor.hpp"

namespace acegan {

inline constexpr int64_t kNoiseDim = 100;
inline constexpr int64_t kCondClasses = 4;     // conditioning labels N,S,V,F
inline constexpr int64_t kHeadClasses = 5;     // + the "generated" verdict
inline constexpr int64_t kFakeClass = 4;       // index of that verdict
inline constexpr int64_t kCmSide = 73;
inline constexpr int64_t kFeatureDim = 150;

// Conditional generator: label embedding gated by Gaussian noise, one shared
// trunk, then two branches whose 73-vectors form a rank-1 coupling matrix.
struct Generator {
    Embedding embed;                // 4 x 100
    Dense trunk;                    // 100 -> 256, relu
    BatchNorm1d bn;                 // 256, momentum 0.8
    Dense branch_u, branch_v;       // 256 -> 256, relu
    Dense head_u, head_v;           // 256 -> 73, linear
    Multiply merge;
    OuterProduct outer;

    explicit Generator(Rng& rng);
    Generator(const Generator&) = delete;
    Generator& operator=(const Generator&) = delete;

    // z [B,100], labels in {0..3} -> [B,73,73]. The branch outputs stay in
    // factor_u / factor_v ([B,73] each) for callers that want the factors.
    Tensor forward(const Tensor& z, const std::vector<int64_t>& labels,
                   bool training);
    void backward(const Tensor& dy, bool param_grads = true);
    std::vector<ParamRef> params();

    Tensor factor_u, factor_v;
};

// LeNet-style discriminator over 73x73 coupling matrices with a softmax
// class head and a linear validity head. The 150-wide FC output doubles as
// the feature vector for distance and projection diagnostics.
struct Discriminator {
    Conv2d c1;            // 1 -> 6, k=8, relu
    MaxPool2d p1;         // 2
    Conv2d c2;            // 6 -> 16, k=10, relu
    AvgPool2d p2;         // 3
    Conv2d c3;            // 16 -> 120, k=5, relu
    Flatten flat;
    Dropout drop1, drop2;
    Dense fc;             // 1920 -> 150, relu
    Dense class_head;     // 150 -> classes, softmax
    Dense validity_head;  // 150 -> 1, linear

    explicit Discriminator(Rng& rng, int64_t classes = kHeadClasses);
    Discriminator(const Discriminator&) = delete;
    Discriminator& operator=(const Discriminator&) = delete;

    struct Output {
        Tensor probs;     // [B,classes]
        Tensor validity;  // [B,1]
        Tensor features;  // [B,150]
    };

    Output forward(const Tensor& x, bool training);  // x [B,1,73,73]
    // Gradients at both heads; dx (optional) receives the input gradient.
    void backward(const Tensor& dprobs, const Tensor& dvalidity,
                  bool param_grads = true, Tensor* dx = nullptr);
    std::vector<ParamRef> params();

    // Restart the dropout stream; finite-difference checks replay a forward
    // pass repeatedly and need the same masks every time.
    void reseed_dropout(uint64_t seed) { drop_rng_ = Rng(seed); }

private:
    Rng drop_rng_;
};

// [B,1,73,73] batch assembled from factor pairs.
Tensor materialize_batch(const std::vector<CouplingFactors>& pool,
                         const std::vector<int64_t>& idx);

// Discriminator objective, evaluated in two halves so training can step the
// optimizer once per half: real beats push validity to 1 and the class head
// to the true class; generated beats push validity to 0 and the class head
// to the "generated" verdict.
double d_real_loss(Discriminator& d, const Tensor& x,
                   const std::vector<int64_t>& labels, bool training,
                   bool with_grads);
double d_fake_loss(Discriminator& d, const Tensor& x, bool training,
                   bool with_grads);
double d_loss(Discriminator& d, const Tensor& real,
              const std::vector<int64_t>& real_labels, const Tensor& fake,
              bool training, bool with_grads);

// Generator objective: validity of its samples toward 1 and the class head
// toward the conditioned label. Gradients reach only the generator.
double g_loss(Generator& g, Discriminator& d, const Tensor& z,
              const std::vector<int64_t>& labels, bool training,
              bool with_grads);

struct GanTrainConfig {
    int64_t iterations = 10000;
    int64_t batch = 128;  // divisible by 4; one quarter per class
    int64_t telemetry_every = 100;
    int64_t fd_samples_per_class = 400;
    uint64_t seed = 1;
};

struct TelemetryRow {
    int64_t iteration = 0;
    double g_loss = 0.0, d_loss = 0.0, fd = 0.0;
    double acc[4] = {0.0, 0.0, 0.0, 0.0};  // real-class accuracy N,S,V,F
};

struct GanTelemetry {
    std::vector<TelemetryRow> rows;
    std::string csv() const;  // %.17g so equal runs serialize identically
};

// Adversarial training: per iteration the discriminator takes one step on a
// real batch and one on a generated batch, then the generator takes two
// steps on one fixed (noise, label) batch. Telemetry lands every
// `telemetry_every` iterations.
GanTelemetry train_gan(Generator& g, Discriminator& d,
                       const std::vector<CouplingFactors>& pool,
                       const GanTrainConfig& cfg);

// `count` coupling matrices conditioned on class `cls`, in factored form.
std::vector<CouplingFactors> generate(Generator& g, int64_t cls, int64_t count,
                                      Rng& rng);

struct FinetuneConfig {
    double target_acc = 0.99;
    double plateau = 0.01;  // accuracy spread over the trailing window
    int64_t window = 10;
    int64_t max_epochs = 500;
    int64_t batch = 128;
    uint64_t seed = 2;
};

struct FinetuneStats {
    int64_t epochs = 0;
    double final_acc = 0.0;
    std::vector<double> epoch_acc;
};

// Supervised pass over an assembled fine-tune set: every sample counts as
// real (validity target 1) with its beat class as the class target. Stops on
// target accuracy, on a plateau, or at the epoch cap.
FinetuneStats finetune(Discriminator& d,
                       const std::vector<CouplingFactors>& set,
                       const FinetuneConfig& cfg);

struct Classification {
    int64_t label = 0;             // 0..3 = N,S,V,F; 4 = generated
    std::vector<double> features;  // 150 values
};

// Argmax over the five softmax outputs, ties to the lowest index; Q is not
// in the label space and is never produced.
std::vector<Classification> classify(Discriminator& d, const Tensor& x);

}  // namespace acegan
