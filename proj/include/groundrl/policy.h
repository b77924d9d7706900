// Copyright 2026 The groundrl Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef GROUNDRL_POLICY_H_
#define GROUNDRL_POLICY_H_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "groundrl/bbox.h"
#include "groundrl/rng.h"
#include "groundrl/synthworld.h"
#include "groundrl/vocabulary.h"

namespace groundrl {

// 12 region mean intensities, 14 disease-presence channels, and the
// intensity-weighted lesion centroid (x, y), all scaled to roughly [0, 1].
inline constexpr int kObservationDim = 28;

struct Observation {
  std::array<double, kObservationDim> v{};

  friend bool operator==(const Observation&, const Observation&) = default;
};

// Throws DimensionError if the image shape differs from `canvas`.
Observation encode_observation(const SynthImage& image,
                               const Canvas& canvas = {});

struct PolicyConfig {
  int vocab_size = 0;
  int embed_dim = 16;
  int context = 8;
  int hidden = 64;
  int obs_dim = kObservationDim;

  int context_width() const { return context * embed_dim; }
  friend bool operator==(const PolicyConfig&, const PolicyConfig&) = default;
};

PolicyConfig default_policy_config(const Vocabulary& vocab);

// Training phase that produced a parameter snapshot.
enum class Phase { kTheta, kThetaPrime, kThetaDoublePrime, kThetaHat };
const char* phase_name(Phase p);
// Throws CheckpointError on an unknown name.
Phase phase_from_name(std::string_view name);

// Parameter blocks of the base policy, in storage order.
enum class Block {
  kTokenEmbeddings,  // V x E
  kObsProjection,    // D x H
  kCtxProjection,    // (K*E) x H
  kHiddenBias,       // H
  kOutProjection,    // H x V
  kOutBias,          // V
};
inline constexpr int kNumBlocks = 6;
const char* block_name(Block b);

// Flat storage of every base parameter plus per-block views.
class PolicyParams {
 public:
  PolicyParams() = default;
  explicit PolicyParams(const PolicyConfig& config);  // all zeros

  // Uniform in [-scale, scale], seeded.
  static PolicyParams init_uniform(const PolicyConfig& config, uint64_t seed,
                                   double scale = 0.05);

  const PolicyConfig& config() const { return config_; }
  Phase phase() const { return phase_; }
  void set_phase(Phase p) { phase_ = p; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::span<double> block(Block b);
  std::span<const double> block(Block b) const;
  size_t block_offset(Block b) const;
  size_t block_size(Block b) const;

  // FNV-1a over the raw bytes of the parameter values. Serves as the
  // snapshot version id.
  uint64_t content_hash() const;
  bool all_finite() const;

  friend bool operator==(const PolicyParams&, const PolicyParams&) = default;

 private:
  PolicyConfig config_;
  Phase phase_ = Phase::kTheta;
  std::vector<double> values_;
};

inline constexpr int kAdapterRank = 8;

// Low-rank delta U (H x r) * W (r x V) added to the output projection.
class AdapterParams {
 public:
  AdapterParams() = default;
  AdapterParams(const PolicyConfig& config, int rank);  // zeros

  // U uniform in [-scale, scale], W zero: the delta starts at exactly zero.
  static AdapterParams init(const PolicyConfig& config, int rank,
                            uint64_t seed, double scale = 0.05);

  int rank() const { return rank_; }
  int hidden() const { return hidden_; }
  int vocab_size() const { return vocab_; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::span<double> u() { return {values_.data(), u_size()}; }
  std::span<const double> u() const { return {values_.data(), u_size()}; }
  std::span<double> w() { return {values_.data() + u_size(), w_size()}; }
  std::span<const double> w() const {
    return {values_.data() + u_size(), w_size()};
  }

  // Version of the base snapshot this adapter was trained against.
  uint64_t base_version() const { return base_version_; }
  void set_base_version(uint64_t v) { base_version_ = v; }

  uint64_t content_hash() const;

  friend bool operator==(const AdapterParams&, const AdapterParams&) = default;

 private:
  size_t u_size() const { return static_cast<size_t>(hidden_) * rank_; }
  size_t w_size() const { return static_cast<size_t>(rank_) * vocab_; }

  int rank_ = 0;
  int hidden_ = 0;
  int vocab_ = 0;
  uint64_t base_version_ = 0;
  std::vector<double> values_;
};

// The last K tokens before a decoding position, left-padded with <pad>.
TokenIds context_window(std::span<const TokenId> sequence, size_t position,
                        int context, TokenId pad);

// Softmax over logits / temperature at one decoding position. Entries are
// strictly positive and sum to 1.
std::vector<double> next_token_distribution(const PolicyParams& params,
                                            const AdapterParams* adapter,
                                            const Observation& obs,
                                            std::span<const TokenId> context,
                                            double temperature = 1.0);

// Raw logits (temperature 1).
std::vector<double> next_token_logits(const PolicyParams& params,
                                      const AdapterParams* adapter,
                                      const Observation& obs,
                                      std::span<const TokenId> context);

struct Rollout {
  TokenIds tokens;               // response only; ends with <eos> if emitted
  std::vector<double> logprobs;  // log of the sampling distribution
  bool finished = false;         // emitted <eos> before max_len

  double total_logprob() const;
  // Response without the trailing <eos>.
  std::span<const TokenId> body() const;
};

struct SamplingOptions {
  int max_len = 32;
  double temperature = 1.0;
  bool greedy = false;  // argmax decoding; temperature is ignored
};

Rollout sample_sequence(const PolicyParams& params,
                        const AdapterParams* adapter, const Observation& obs,
                        std::span<const TokenId> prompt,
                        const SamplingOptions& options, Rng& rng);

// Greedy decode; no randomness consumed.
Rollout greedy_decode(const PolicyParams& params, const AdapterParams* adapter,
                      const Observation& obs, std::span<const TokenId> prompt,
                      int max_len);

// Sum of teacher-forced log-probabilities of `response` after `prompt`.
// Throws VocabularyError on ids outside the vocabulary.
double sequence_logprob(const PolicyParams& params,
                        const AdapterParams* adapter, const Observation& obs,
                        std::span<const TokenId> prompt,
                        std::span<const TokenId> response);

// Which parameter groups receive gradient.
struct TrainableMask {
  std::array<bool, kNumBlocks> base{true, true, true, true, true, true};
  bool adapter = false;

  static TrainableMask base_only() { return {}; }
  static TrainableMask adapter_only() {
    TrainableMask m;
    m.base.fill(false);
    m.adapter = true;
    return m;
  }
  bool trains(Block b) const { return base[static_cast<int>(b)]; }
};

// Gradient buffers shaped like PolicyParams / AdapterParams.
struct Gradient {
  std::vector<double> base;
  std::vector<double> adapter;

  static Gradient zeros_like(const PolicyParams& params,
                             const AdapterParams* adapter);
  double norm() const;
  bool all_finite() const;
};

// Adds d(objective)/d(params) for one decoding position given
// d(objective)/d(logits). Frozen blocks are left untouched.
void accumulate_position_gradient(const PolicyParams& params,
                                  const AdapterParams* adapter,
                                  const Observation& obs,
                                  std::span<const TokenId> context,
                                  std::span<const double> dlogits,
                                  const TrainableMask& mask, Gradient& grad);

struct SequenceExample {
  const Observation* obs = nullptr;
  TokenIds prompt;
  TokenIds target;
};

struct LossAndGradient {
  double loss = 0.0;  // mean negative log-likelihood per target token
  size_t tokens = 0;
  Gradient grad;
};

// Throws Error on an empty batch.
LossAndGradient sft_loss_and_grad(const PolicyParams& params,
                                  const AdapterParams* adapter,
                                  std::span<const SequenceExample> batch,
                                  const TrainableMask& mask);

// Mean NLL only.
double sft_loss(const PolicyParams& params, const AdapterParams* adapter,
                std::span<const SequenceExample> batch);

// KL(p || q) between two distributions over the same support.
double kl_divergence(std::span<const double> p, std::span<const double> q);

// KL(pi_a || pi_b) at one decoding position, exact over the vocabulary.
double exact_kl(const PolicyParams& a, const PolicyParams& b,
                const Observation& obs, std::span<const TokenId> context);

// Sum of per-position KL(pi_a || pi_b) along `response` (teacher forced).
double sequence_kl(const PolicyParams& a, const PolicyParams& b,
                   const Observation& obs, std::span<const TokenId> prompt,
                   std::span<const TokenId> response);

}  // namespace groundrl

#endif  // GROUNDRL_POLICY_H_
