#pragma once

// Minibatch stream over per-domain samplers with a periodic refresh policy.
//
// The engine holds one sampler per domain. Diversity samplers (k-DPP,
// k-means++) see a feature snapshot that the caller replaces through
// refresh(); between refreshes every draw uses the cached kernel or snapshot.
// With warmup enabled, draws made before the first refresh fall back to
// weighted random sampling.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "divsample/dpp_sampler.hpp"
#include "divsample/error.hpp"
#include "divsample/feature_store.hpp"
#include "divsample/kernels.hpp"
#include "divsample/kmeanspp_sampler.hpp"
#include "divsample/random.hpp"
#include "divsample/subset.hpp"

namespace divsample {

enum class SamplerKind { WeightedRandom, Kdpp, Kmeanspp };

inline std::string_view to_string(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::WeightedRandom: return "random";
    case SamplerKind::Kdpp: return "kdpp";
    case SamplerKind::Kmeanspp: return "kmeanspp";
  }
  return "?";
}

inline SamplerKind parse_sampler_kind(std::string_view s) {
  if (s == "random" || s == "weighted-random") return SamplerKind::WeightedRandom;
  if (s == "kdpp" || s == "k-dpp") return SamplerKind::Kdpp;
  if (s == "kmeanspp" || s == "k-means++") return SamplerKind::Kmeanspp;
  throw ValidationError("unknown sampler '" + std::string(s) + "'");
}

struct RefreshPolicy {
  std::size_t period = 400;
  bool warmup = true;

  void validate() const {
    if (period < 1) throw ValidationError("refresh period must be at least 1");
  }

  /// Whether the samplers are rebuilt before running `iteration`.
  bool due(std::uint64_t iteration) const { return iteration % period == 0; }

  /// Iterations in [0, total) at which a sampler state is (re)built. Iteration
  /// 0 is the warmup sampler (or the initial snapshot without warmup).
  std::vector<std::uint64_t> schedule(std::uint64_t total) const {
    validate();
    std::vector<std::uint64_t> out;
    for (std::uint64_t i = 0; i < total; i += period) out.push_back(i);
    return out;
  }
};

/// k distinct indices drawn sequentially without replacement, each step
/// proportional to the remaining weights.
template <typename Urbg>
Subset weighted_random_sample(std::span<const double> weights, std::size_t k, Urbg& rng) {
  std::size_t positive = 0;
  for (double w : weights) positive += w > 0.0 ? 1 : 0;
  if (k > positive)
    throw InsufficientSupportError("k = " + std::to_string(k) + " exceeds the " +
                                   std::to_string(positive) + " positive-weight instances");
  std::vector<double> mass(weights.begin(), weights.end());
  std::vector<std::size_t> picked;
  picked.reserve(k);
  for (std::size_t step = 0; step < k; ++step) {
    const std::size_t i = draw_categorical(std::span<const double>(mass), rng);
    picked.push_back(i);
    mass[i] = 0.0;
  }
  return Subset(std::move(picked));
}

template <typename Urbg>
Subset weighted_random_sample(const FeatureTable& table, std::size_t k, Urbg& rng) {
  return weighted_random_sample(std::span<const double>(table.weights()), k, rng);
}

struct EngineConfig {
  SamplerKind kind = SamplerKind::WeightedRandom;
  std::size_t batch_size = 32;
  RefreshPolicy policy{};
  GammaSet gammas = GammaSet::defaults();
  std::uint64_t seed = 0;
};

class SamplerEngine {
public:
  /// With warmup on, `domains` supplies weights and the domain layout only;
  /// diversity samplers start after the first refresh(). With warmup off,
  /// `domains` is also the initial feature snapshot.
  SamplerEngine(EngineConfig config, DomainCollection domains) : config_(std::move(config)) {
    config_.policy.validate();
    if (domains.empty()) throw ValidationError("engine needs at least one domain");
    install(std::move(domains), !config_.policy.warmup);
  }

  /// Rebuilds every per-domain sampler from a new feature snapshot. The
  /// iteration counter is left untouched.
  void refresh(const DomainCollection& snapshot) {
    if (snapshot.size() != domains_.size())
      throw ValidationError("refresh must supply exactly the engine's domains");
    for (std::size_t i = 0; i < domains_.size(); ++i) {
      const auto& tag = domains_[i].table.domain();
      const auto j = snapshot.index_of(tag);
      if (!j) throw ValidationError("refresh is missing domain '" + tag + "'");
      if (snapshot[*j].n() != domains_[i].table.n())
        throw ValidationError("refresh changed the instance count of domain '" + tag + "'");
    }
    std::vector<FeatureTable> ordered;
    for (const auto& d : domains_) ordered.push_back(snapshot.at(d.table.domain()));
    install(DomainCollection(std::move(ordered)), true);
    ++refresh_count_;
  }

  /// Next batch for `domain`, drawn from the substream (seed, domain, draw index).
  Subset next_minibatch(std::string_view domain) {
    const std::size_t d = domain_index(domain);
    Subset s = draw(d, domains_[d].draws);
    ++domains_[d].draws;
    ++iteration_;
    return s;
  }

  /// Next batch for `domain` using a caller-owned generator.
  template <typename Urbg>
  Subset next_minibatch(std::string_view domain, Urbg& rng) {
    const std::size_t d = domain_index(domain);
    Subset s = dispatch(d, rng);
    ++domains_[d].draws;
    ++iteration_;
    return s;
  }

  /// The batch that draw number `draw_index` of domain `d` yields. Pure and
  /// safe to call concurrently between refreshes.
  Subset draw(std::size_t d, std::uint64_t draw_index) const {
    Rng rng = substream(config_.seed, d, draw_index);
    return dispatch(d, rng);
  }

  bool diversity_active() const noexcept { return snapshot_ready_; }
  std::uint64_t iteration() const noexcept { return iteration_; }
  std::size_t refresh_count() const noexcept { return refresh_count_; }
  const EngineConfig& config() const noexcept { return config_; }
  std::size_t num_domains() const noexcept { return domains_.size(); }
  const FeatureTable& table(std::size_t d) const { return domains_.at(d).table; }

  std::size_t domain_index(std::string_view tag) const {
    for (std::size_t i = 0; i < domains_.size(); ++i)
      if (domains_[i].table.domain() == tag) return i;
    throw ValidationError("unknown domain '" + std::string(tag) + "'");
  }

private:
  struct DomainState {
    FeatureTable table;
    std::optional<KdppSampler> kdpp;
    std::uint64_t draws = 0;
  };

  void install(DomainCollection snapshot, bool ready) {
    std::vector<DomainState> next;
    next.reserve(snapshot.size());
    for (std::size_t i = 0; i < snapshot.size(); ++i) {
      DomainState st{snapshot[i], std::nullopt, 0};
      if (i < domains_.size()) st.draws = domains_[i].draws;
      if (ready && config_.kind == SamplerKind::Kdpp) {
        const auto gram = rbf_mixture_gram(st.table, config_.gammas);
        st.kdpp.emplace(weighted_likelihood(gram, st.table.weights()), config_.batch_size);
      }
      next.push_back(std::move(st));
    }
    domains_ = std::move(next);
    snapshot_ready_ = ready;
  }

  template <typename Urbg>
  Subset dispatch(std::size_t d, Urbg& rng) const {
    const auto& st = domains_.at(d);
    const std::size_t k = config_.batch_size;
    if (config_.kind == SamplerKind::WeightedRandom || !snapshot_ready_)
      return weighted_random_sample(st.table, k, rng);
    if (config_.kind == SamplerKind::Kdpp) return (*st.kdpp)(rng);
    return kmeanspp_sample(st.table, k, rng);
  }

  EngineConfig config_;
  std::vector<DomainState> domains_;
  bool snapshot_ready_ = false;
  std::uint64_t iteration_ = 0;
  std::size_t refresh_count_ = 0;
};

}  // namespace divsample
