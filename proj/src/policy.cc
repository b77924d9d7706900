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

#include "groundrl/policy.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "groundrl/errors.h"

namespace groundrl {
namespace {

// Hidden-layer activations for one decoding position.
struct HiddenState {
  std::vector<double> x;  // concatenated context embeddings, K*E
  std::vector<double> h;  // tanh activations, H
};

void check_context(const PolicyParams& params,
                   std::span<const TokenId> context) {
  const auto& c = params.config();
  if (static_cast<int>(context.size()) != c.context) {
    throw Error("context must hold exactly " + std::to_string(c.context) +
                " tokens");
  }
  for (TokenId t : context) {
    if (t < 0 || t >= c.vocab_size) {
      throw VocabularyError("token id out of range: " + std::to_string(t));
    }
  }
}

HiddenState hidden_forward(const PolicyParams& params, const Observation& obs,
                           std::span<const TokenId> context) {
  const PolicyConfig& c = params.config();
  const int E = c.embed_dim, H = c.hidden, D = c.obs_dim;
  HiddenState s;
  s.x.resize(static_cast<size_t>(c.context_width()));
  const auto emb = params.block(Block::kTokenEmbeddings);
  for (int k = 0; k < c.context; ++k) {
    std::memcpy(&s.x[static_cast<size_t>(k) * E],
                &emb[static_cast<size_t>(context[k]) * E], sizeof(double) * E);
  }
  const auto hb = params.block(Block::kHiddenBias);
  std::vector<double> a(hb.begin(), hb.end());
  const auto op = params.block(Block::kObsProjection);
  for (int d = 0; d < D; ++d) {
    const double od = obs.v[d];
    if (od == 0.0) continue;
    const double* row = &op[static_cast<size_t>(d) * H];
    for (int j = 0; j < H; ++j) a[j] += od * row[j];
  }
  const auto cp = params.block(Block::kCtxProjection);
  for (size_t i = 0; i < s.x.size(); ++i) {
    const double xi = s.x[i];
    const double* row = &cp[i * H];
    for (int j = 0; j < H; ++j) a[j] += xi * row[j];
  }
  s.h.resize(H);
  for (int j = 0; j < H; ++j) s.h[j] = std::tanh(a[j]);
  return s;
}

std::vector<double> logits_from_hidden(const PolicyParams& params,
                                       const AdapterParams* adapter,
                                       std::span<const double> h) {
  const PolicyConfig& c = params.config();
  const int H = c.hidden, V = c.vocab_size;
  const auto ob = params.block(Block::kOutBias);
  std::vector<double> z(ob.begin(), ob.end());
  const auto out = params.block(Block::kOutProjection);
  for (int j = 0; j < H; ++j) {
    const double hj = h[j];
    const double* row = &out[static_cast<size_t>(j) * V];
    for (int v = 0; v < V; ++v) z[v] += hj * row[v];
  }
  if (adapter != nullptr) {
    const int r = adapter->rank();
    const auto u = adapter->u();
    const auto w = adapter->w();
    std::vector<double> low(r, 0.0);
    for (int j = 0; j < H; ++j) {
      for (int k = 0; k < r; ++k) low[k] += h[j] * u[static_cast<size_t>(j) * r + k];
    }
    for (int k = 0; k < r; ++k) {
      const double* row = &w[static_cast<size_t>(k) * V];
      for (int v = 0; v < V; ++v) z[v] += low[k] * row[v];
    }
  }
  return z;
}

// log-softmax in place; returns nothing, z becomes log-probabilities.
void log_softmax_inplace(std::vector<double>& z) {
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp(v - m);
  const double lse = m + std::log(s);
  for (double& v : z) v -= lse;
}

std::vector<double> softmax(std::vector<double> z) {
  log_softmax_inplace(z);
  for (double& v : z) v = std::exp(v);
  return z;
}

void check_adapter(const PolicyParams& params, const AdapterParams* adapter) {
  if (adapter == nullptr) return;
  if (adapter->hidden() != params.config().hidden ||
      adapter->vocab_size() != params.config().vocab_size) {
    throw Error("adapter shape does not match the base policy");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Observation

Observation encode_observation(const SynthImage& image, const Canvas& canvas) {
  if (image.height != canvas.height || image.width != canvas.width ||
      image.pixels.size() != static_cast<size_t>(image.height) * image.width) {
    throw DimensionError("image is " + std::to_string(image.height) + "x" +
                         std::to_string(image.width) + ", expected " +
                         std::to_string(canvas.height) + "x" +
                         std::to_string(canvas.width));
  }
  const RegionMap map = build_region_map(canvas);
  Observation obs;
  for (int r = 0; r < kNumRegions; ++r) {
    const BBox& b = map.box(r);
    double sum = 0.0;
    for (int y = b.y1; y < b.y2; ++y) {
      for (int x = b.x1; x < b.x2; ++x) sum += image.at(x, y);
    }
    obs.v[r] = sum / (255.0 * static_cast<double>(b.area()));
  }
  std::array<int, kNumDiseases> peak{};
  double mass = 0.0, mx = 0.0, my = 0.0;
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const int v = image.at(x, y);
      if (v <= 0) continue;
      mass += v;
      mx += v * (x + 0.5);
      my += v * (y + 0.5);
      const int d = (v - 160) / 6 + 1;
      if (v >= 160 && d >= 1 && d < kNumDiseases) peak[d] = std::max(peak[d], v);
    }
  }
  double* disease = &obs.v[kNumRegions];
  disease[kNoFinding] = mass == 0.0 ? 1.0 : 0.0;
  for (int d = 1; d < kNumDiseases; ++d) disease[d] = peak[d] / 255.0;
  if (mass > 0.0) {
    obs.v[kNumRegions + kNumDiseases] = mx / mass / image.width;
    obs.v[kNumRegions + kNumDiseases + 1] = my / mass / image.height;
  }
  return obs;
}

// ---------------------------------------------------------------------------
// Parameters

PolicyConfig default_policy_config(const Vocabulary& vocab) {
  PolicyConfig c;
  c.vocab_size = static_cast<int>(vocab.size());
  return c;
}

const char* phase_name(Phase p) {
  switch (p) {
    case Phase::kTheta:
      return "theta";
    case Phase::kThetaPrime:
      return "theta_prime";
    case Phase::kThetaDoublePrime:
      return "theta_double_prime";
    case Phase::kThetaHat:
      return "theta_hat";
  }
  return "?";
}

Phase phase_from_name(std::string_view name) {
  for (Phase p : {Phase::kTheta, Phase::kThetaPrime, Phase::kThetaDoublePrime,
                  Phase::kThetaHat}) {
    if (name == phase_name(p)) return p;
  }
  throw CheckpointError("unknown phase tag: " + std::string(name));
}

const char* block_name(Block b) {
  switch (b) {
    case Block::kTokenEmbeddings:
      return "token_embeddings";
    case Block::kObsProjection:
      return "obs_projection";
    case Block::kCtxProjection:
      return "ctx_projection";
    case Block::kHiddenBias:
      return "hidden_bias";
    case Block::kOutProjection:
      return "out_projection";
    case Block::kOutBias:
      return "out_bias";
  }
  return "?";
}

PolicyParams::PolicyParams(const PolicyConfig& config) : config_(config) {
  if (config.vocab_size <= 0 || config.embed_dim <= 0 || config.context <= 0 ||
      config.hidden <= 0 || config.obs_dim != kObservationDim) {
    throw ConfigError("invalid policy shape");
  }
  values_.assign(block_offset(Block::kOutBias) + block_size(Block::kOutBias),
                 0.0);
}

PolicyParams PolicyParams::init_uniform(const PolicyConfig& config,
                                        uint64_t seed, double scale) {
  PolicyParams p(config);
  Rng rng(derive_seed({seed, 0x7e7a}));
  for (double& v : p.values_) v = rng.uniform(-scale, scale);
  return p;
}

size_t PolicyParams::block_size(Block b) const {
  const auto V = static_cast<size_t>(config_.vocab_size);
  const auto E = static_cast<size_t>(config_.embed_dim);
  const auto H = static_cast<size_t>(config_.hidden);
  const auto D = static_cast<size_t>(config_.obs_dim);
  const auto KE = static_cast<size_t>(config_.context_width());
  switch (b) {
    case Block::kTokenEmbeddings:
      return V * E;
    case Block::kObsProjection:
      return D * H;
    case Block::kCtxProjection:
      return KE * H;
    case Block::kHiddenBias:
      return H;
    case Block::kOutProjection:
      return H * V;
    case Block::kOutBias:
      return V;
  }
  return 0;
}

size_t PolicyParams::block_offset(Block b) const {
  size_t off = 0;
  for (int i = 0; i < static_cast<int>(b); ++i) {
    off += block_size(static_cast<Block>(i));
  }
  return off;
}

std::span<double> PolicyParams::block(Block b) {
  return std::span<double>(values_).subspan(block_offset(b), block_size(b));
}

std::span<const double> PolicyParams::block(Block b) const {
  return std::span<const double>(values_).subspan(block_offset(b),
                                                  block_size(b));
}

uint64_t PolicyParams::content_hash() const {
  return fnv1a(std::string_view(reinterpret_cast<const char*>(values_.data()),
                                values_.size() * sizeof(double)));
}

bool PolicyParams::all_finite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

AdapterParams::AdapterParams(const PolicyConfig& config, int rank)
    : rank_(rank), hidden_(config.hidden), vocab_(config.vocab_size) {
  if (rank <= 0) throw ConfigError("adapter rank must be positive");
  values_.assign(u_size() + w_size(), 0.0);
}

AdapterParams AdapterParams::init(const PolicyConfig& config, int rank,
                                  uint64_t seed, double scale) {
  AdapterParams a(config, rank);
  Rng rng(derive_seed({seed, 0xada9}));
  for (double& v : a.u()) v = rng.uniform(-scale, scale);
  return a;
}

uint64_t AdapterParams::content_hash() const {
  return fnv1a(std::string_view(reinterpret_cast<const char*>(values_.data()),
                                values_.size() * sizeof(double)));
}

// ---------------------------------------------------------------------------
// Inference

TokenIds context_window(std::span<const TokenId> sequence, size_t position,
                        int context, TokenId pad) {
  TokenIds ctx(static_cast<size_t>(context), pad);
  const size_t n = std::min(position, sequence.size());
  for (int k = 0; k < context; ++k) {
    const auto back = static_cast<size_t>(context - k);
    if (back <= n) ctx[k] = sequence[n - back];
  }
  return ctx;
}

std::vector<double> next_token_logits(const PolicyParams& params,
                                      const AdapterParams* adapter,
                                      const Observation& obs,
                                      std::span<const TokenId> context) {
  check_context(params, context);
  check_adapter(params, adapter);
  const HiddenState s = hidden_forward(params, obs, context);
  return logits_from_hidden(params, adapter, s.h);
}

std::vector<double> next_token_distribution(const PolicyParams& params,
                                            const AdapterParams* adapter,
                                            const Observation& obs,
                                            std::span<const TokenId> context,
                                            double temperature) {
  if (!(temperature > 0.0)) throw Error("temperature must be positive");
  auto z = next_token_logits(params, adapter, obs, context);
  if (temperature != 1.0) {
    for (double& v : z) v /= temperature;
  }
  return softmax(std::move(z));
}

double Rollout::total_logprob() const {
  double s = 0.0;
  for (double v : logprobs) s += v;
  return s;
}

std::span<const TokenId> Rollout::body() const {
  std::span<const TokenId> t(tokens);
  return finished ? t.first(t.size() - 1) : t;
}

namespace {

Rollout decode(const PolicyParams& params, const AdapterParams* adapter,
               const Observation& obs, std::span<const TokenId> prompt,
               const SamplingOptions& options, Rng* rng) {
  if (options.max_len < 1) throw Error("max_len must be >= 1");
  if (!options.greedy && !(options.temperature > 0.0)) {
    throw Error("temperature must be positive");
  }
  const PolicyConfig& c = params.config();
  // Only the id of <eos> matters here; it is fixed by the standard inventory.
  const TokenId eos = Vocabulary::standard().eos();
  const TokenId pad = Vocabulary::standard().pad();
  TokenIds seq(prompt.begin(), prompt.end());
  Rollout r;
  for (int step = 0; step < options.max_len; ++step) {
    const TokenIds ctx = context_window(seq, seq.size(), c.context, pad);
    auto z = next_token_logits(params, adapter, obs, ctx);
    TokenId next;
    if (options.greedy) {
      next = static_cast<TokenId>(std::max_element(z.begin(), z.end()) - z.begin());
      log_softmax_inplace(z);
    } else {
      if (options.temperature != 1.0) {
        for (double& v : z) v /= options.temperature;
      }
      log_softmax_inplace(z);
      std::vector<double> p(z.size());
      for (size_t i = 0; i < z.size(); ++i) p[i] = std::exp(z[i]);
      next = static_cast<TokenId>(rng->categorical(p));
    }
    r.tokens.push_back(next);
    r.logprobs.push_back(z[next]);
    seq.push_back(next);
    if (next == eos) {
      r.finished = true;
      break;
    }
  }
  return r;
}

}  // namespace

Rollout sample_sequence(const PolicyParams& params,
                        const AdapterParams* adapter, const Observation& obs,
                        std::span<const TokenId> prompt,
                        const SamplingOptions& options, Rng& rng) {
  return decode(params, adapter, obs, prompt, options, &rng);
}

Rollout greedy_decode(const PolicyParams& params, const AdapterParams* adapter,
                      const Observation& obs, std::span<const TokenId> prompt,
                      int max_len) {
  SamplingOptions o;
  o.max_len = max_len;
  o.greedy = true;
  return decode(params, adapter, obs, prompt, o, nullptr);
}

double sequence_logprob(const PolicyParams& params,
                        const AdapterParams* adapter, const Observation& obs,
                        std::span<const TokenId> prompt,
                        std::span<const TokenId> response) {
  const PolicyConfig& c = params.config();
  TokenIds seq(prompt.begin(), prompt.end());
  seq.insert(seq.end(), response.begin(), response.end());
  const TokenId pad = Vocabulary::standard().pad();
  double total = 0.0;
  for (size_t t = 0; t < response.size(); ++t) {
    const TokenId y = response[t];
    if (y < 0 || y >= c.vocab_size) {
      throw VocabularyError("response token id out of range: " +
                            std::to_string(y));
    }
    const size_t pos = prompt.size() + t;
    auto z = next_token_logits(params, adapter, obs,
                               context_window(seq, pos, c.context, pad));
    log_softmax_inplace(z);
    total += z[y];
  }
  return total;
}

// ---------------------------------------------------------------------------
// Gradients

Gradient Gradient::zeros_like(const PolicyParams& params,
                              const AdapterParams* adapter) {
  Gradient g;
  g.base.assign(params.values().size(), 0.0);
  if (adapter != nullptr) g.adapter.assign(adapter->values().size(), 0.0);
  return g;
}

double Gradient::norm() const {
  double s = 0.0;
  for (double v : base) s += v * v;
  for (double v : adapter) s += v * v;
  return std::sqrt(s);
}

bool Gradient::all_finite() const {
  auto fin = [](double v) { return std::isfinite(v); };
  return std::all_of(base.begin(), base.end(), fin) &&
         std::all_of(adapter.begin(), adapter.end(), fin);
}

void accumulate_position_gradient(const PolicyParams& params,
                                  const AdapterParams* adapter,
                                  const Observation& obs,
                                  std::span<const TokenId> context,
                                  std::span<const double> dlogits,
                                  const TrainableMask& mask, Gradient& grad) {
  check_context(params, context);
  check_adapter(params, adapter);
  const PolicyConfig& c = params.config();
  const int E = c.embed_dim, H = c.hidden, V = c.vocab_size, D = c.obs_dim;
  const HiddenState s = hidden_forward(params, obs, context);

  auto gblock = [&](Block b) {
    return std::span<double>(grad.base).subspan(params.block_offset(b),
                                                params.block_size(b));
  };

  if (mask.trains(Block::kOutBias)) {
    auto g = gblock(Block::kOutBias);
    for (int v = 0; v < V; ++v) g[v] += dlogits[v];
  }
  if (mask.trains(Block::kOutProjection)) {
    auto g = gblock(Block::kOutProjection);
    for (int j = 0; j < H; ++j) {
      const double hj = s.h[j];
      double* row = &g[static_cast<size_t>(j) * V];
      for (int v = 0; v < V; ++v) row[v] += hj * dlogits[v];
    }
  }

  // dh = (Out + U W) dlogits
  std::vector<double> dh(H, 0.0);
  const auto out = params.block(Block::kOutProjection);
  for (int j = 0; j < H; ++j) {
    const double* row = &out[static_cast<size_t>(j) * V];
    double acc = 0.0;
    for (int v = 0; v < V; ++v) acc += row[v] * dlogits[v];
    dh[j] = acc;
  }
  if (adapter != nullptr) {
    const int r = adapter->rank();
    const auto u = adapter->u();
    const auto w = adapter->w();
    std::vector<double> wg(r, 0.0);  // W dlogits
    for (int k = 0; k < r; ++k) {
      const double* row = &w[static_cast<size_t>(k) * V];
      double acc = 0.0;
      for (int v = 0; v < V; ++v) acc += row[v] * dlogits[v];
      wg[k] = acc;
    }
    for (int j = 0; j < H; ++j) {
      for (int k = 0; k < r; ++k) dh[j] += u[static_cast<size_t>(j) * r + k] * wg[k];
    }
    if (mask.adapter) {
      std::span<double> gu(grad.adapter.data(), static_cast<size_t>(H) * r);
      std::span<double> gw(grad.adapter.data() + gu.size(),
                           static_cast<size_t>(r) * V);
      for (int j = 0; j < H; ++j) {
        for (int k = 0; k < r; ++k) gu[static_cast<size_t>(j) * r + k] += s.h[j] * wg[k];
      }
      std::vector<double> low(r, 0.0);  // U^T h
      for (int j = 0; j < H; ++j) {
        for (int k = 0; k < r; ++k) low[k] += s.h[j] * u[static_cast<size_t>(j) * r + k];
      }
      for (int k = 0; k < r; ++k) {
        double* row = &gw[static_cast<size_t>(k) * V];
        for (int v = 0; v < V; ++v) row[v] += low[k] * dlogits[v];
      }
    }
  }

  const bool need_lower =
      mask.trains(Block::kHiddenBias) || mask.trains(Block::kObsProjection) ||
      mask.trains(Block::kCtxProjection) || mask.trains(Block::kTokenEmbeddings);
  if (!need_lower) return;

  std::vector<double> da(H);
  for (int j = 0; j < H; ++j) da[j] = dh[j] * (1.0 - s.h[j] * s.h[j]);

  if (mask.trains(Block::kHiddenBias)) {
    auto g = gblock(Block::kHiddenBias);
    for (int j = 0; j < H; ++j) g[j] += da[j];
  }
  if (mask.trains(Block::kObsProjection)) {
    auto g = gblock(Block::kObsProjection);
    for (int d = 0; d < D; ++d) {
      const double od = obs.v[d];
      if (od == 0.0) continue;
      double* row = &g[static_cast<size_t>(d) * H];
      for (int j = 0; j < H; ++j) row[j] += od * da[j];
    }
  }
  if (mask.trains(Block::kCtxProjection)) {
    auto g = gblock(Block::kCtxProjection);
    for (size_t i = 0; i < s.x.size(); ++i) {
      const double xi = s.x[i];
      double* row = &g[i * H];
      for (int j = 0; j < H; ++j) row[j] += xi * da[j];
    }
  }
  if (mask.trains(Block::kTokenEmbeddings)) {
    auto g = gblock(Block::kTokenEmbeddings);
    const auto cp = params.block(Block::kCtxProjection);
    for (int k = 0; k < c.context; ++k) {
      double* ge = &g[static_cast<size_t>(context[k]) * E];
      for (int e = 0; e < E; ++e) {
        const double* row = &cp[(static_cast<size_t>(k) * E + e) * H];
        double acc = 0.0;
        for (int j = 0; j < H; ++j) acc += row[j] * da[j];
        ge[e] += acc;
      }
    }
  }
}

namespace {

size_t count_tokens(std::span<const SequenceExample> batch) {
  size_t n = 0;
  for (const auto& ex : batch) n += ex.target.size();
  return n;
}

}  // namespace

LossAndGradient sft_loss_and_grad(const PolicyParams& params,
                                  const AdapterParams* adapter,
                                  std::span<const SequenceExample> batch,
                                  const TrainableMask& mask) {
  if (batch.empty()) throw Error("sft_loss_and_grad: empty batch");
  if (mask.adapter && adapter == nullptr) {
    throw Error("adapter marked trainable but none supplied");
  }
  LossAndGradient out;
  out.grad = Gradient::zeros_like(params, adapter);
  out.tokens = count_tokens(batch);
  if (out.tokens == 0) throw Error("sft_loss_and_grad: batch has no targets");
  const double inv = 1.0 / static_cast<double>(out.tokens);
  const PolicyConfig& c = params.config();
  const TokenId pad = Vocabulary::standard().pad();
  std::vector<double> dlogits(static_cast<size_t>(c.vocab_size));
  for (const auto& ex : batch) {
    TokenIds seq = ex.prompt;
    seq.insert(seq.end(), ex.target.begin(), ex.target.end());
    for (size_t t = 0; t < ex.target.size(); ++t) {
      const TokenId y = ex.target[t];
      if (y < 0 || y >= c.vocab_size) {
        throw VocabularyError("target token id out of range");
      }
      const TokenIds ctx =
          context_window(seq, ex.prompt.size() + t, c.context, pad);
      auto z = next_token_logits(params, adapter, *ex.obs, ctx);
      log_softmax_inplace(z);
      out.loss -= z[y] * inv;
      for (size_t v = 0; v < z.size(); ++v) dlogits[v] = std::exp(z[v]) * inv;
      dlogits[y] -= inv;
      accumulate_position_gradient(params, adapter, *ex.obs, ctx, dlogits,
                                   mask, out.grad);
    }
  }
  return out;
}

double sft_loss(const PolicyParams& params, const AdapterParams* adapter,
                std::span<const SequenceExample> batch) {
  if (batch.empty()) throw Error("sft_loss: empty batch");
  const size_t n = count_tokens(batch);
  if (n == 0) throw Error("sft_loss: batch has no targets");
  double total = 0.0;
  for (const auto& ex : batch) {
    total -= sequence_logprob(params, adapter, *ex.obs, ex.prompt, ex.target);
  }
  return total / static_cast<double>(n);
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  double s = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) s += p[i] * (std::log(p[i]) - std::log(q[i]));
  }
  return s;
}

namespace {

double kl_from_logits(std::vector<double> za, std::vector<double> zb) {
  log_softmax_inplace(za);
  log_softmax_inplace(zb);
  double s = 0.0;
  for (size_t i = 0; i < za.size(); ++i) s += std::exp(za[i]) * (za[i] - zb[i]);
  return s;
}

}  // namespace

double exact_kl(const PolicyParams& a, const PolicyParams& b,
                const Observation& obs, std::span<const TokenId> context) {
  if (a.config().vocab_size != b.config().vocab_size) {
    throw VocabularyError("exact_kl: policies use different vocabularies");
  }
  return kl_from_logits(next_token_logits(a, nullptr, obs, context),
                        next_token_logits(b, nullptr, obs, context));
}

double sequence_kl(const PolicyParams& a, const PolicyParams& b,
                   const Observation& obs, std::span<const TokenId> prompt,
                   std::span<const TokenId> response) {
  TokenIds seq(prompt.begin(), prompt.end());
  seq.insert(seq.end(), response.begin(), response.end());
  const TokenId pad = Vocabulary::standard().pad();
  double total = 0.0;
  for (size_t t = 0; t < response.size(); ++t) {
    total += exact_kl(a, b, obs,
                      context_window(seq, prompt.size() + t,
                                     a.config().context, pad));
  }
  return total;
}

}  // namespace groundrl
