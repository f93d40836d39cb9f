// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "divsample/divsample.hpp"
#include "../oracles.hpp"

using namespace divsample;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

oracle::Dense to_dense(const Matrix& m) {
  oracle::Dense out(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
  return out;
}

FeatureMatrix gaussian(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  FeatureMatrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
  return x;
}

// Gaps between consecutive sampler means in units of the combined standard error.
double gap_in_se(double lo_mean, double lo_se, double hi_mean, double hi_se) {
  return (hi_mean - lo_mean) / std::sqrt(lo_se * lo_se + hi_se * hi_se);
}

bool cardinality_ok = true;

Outcome kdpp_exactness() {
  const Matrix l = rbf_mixture_gram(gaussian(6, 3, 101), GammaSet::defaults()).matrix();
  const auto kernel = LikelihoodKernel::from_matrix(l);
  Eigen::SelfAdjointEigenSolver<Matrix> es(l, Eigen::EigenvaluesOnly);
  if (!(es.eigenvalues().minCoeff() > 0.0)) return {false, "kernel not strictly PD"};

  const auto expected = oracle::kdpp_probabilities(to_dense(l), 2);
  double total = 0.0;
  oracle::for_each_combination(6, 2, [&](const oracle::Index& s) {
    total += kdpp_subset_probability(kernel, Subset(s), 2);
  });

  const KdppSampler sampler(kernel, 2);
  Rng rng = substream(2024, 1);
  const std::size_t draws = 200000;
  std::map<oracle::Index, std::size_t> counts;
  for (std::size_t r = 0; r < draws; ++r) {
    const auto s = sampler(rng);
    cardinality_ok &= s.size() == 2;
    ++counts[s.indices()];
  }
  const double z = oracle::max_multinomial_z(expected, counts, draws);
  const bool pass = expected.size() == 15 && z <= 4.0 && std::abs(total - 1.0) <= 1e-10;
  return {pass, "max|z|=" + fmt("%.3f", z) + " sum_p-1=" + fmt("%.2e", total - 1.0)};
}

Outcome eigen_marginals() {
  Matrix l = Matrix::Zero(2, 2);
  l(0, 0) = 2;
  l(1, 1) = 1;
  const auto dec = decompose(l);
  const auto esp = esp_table(dec.eigenvalues, 1);
  Rng rng = substream(2024, 2);
  const std::size_t draws = 100000;
  std::size_t zero = 0;
  for (std::size_t r = 0; r < draws; ++r) {
    const auto s = sample_eigenvector_subset(dec, esp, 1, rng);
    cardinality_ok &= s.size() == 1;
    zero += s[0] == 0;
  }
  // extra cardinality sweep on a larger kernel
  const KdppSampler big(LikelihoodKernel::from_matrix(
                            rbf_mixture_gram(gaussian(400, 8, 7), GammaSet::defaults()).matrix()),
                        32);
  for (int r = 0; r < 200; ++r) cardinality_ok &= big(rng).size() == 32;
  const double f = static_cast<double>(zero) / draws;
  return {std::abs(f - 2.0 / 3.0) <= 0.01 && cardinality_ok,
          "freq=" + fmt("%.4f", f) + (cardinality_ok ? " cardinality ok" : " cardinality BROKEN")};
}

Outcome qe_trend() {
  SynthSpec spec;
  spec.seed = 7;
  const auto data = generate_domains(spec);
  std::map<SamplerKind, QeReport> r;
  for (auto kind : {SamplerKind::WeightedRandom, SamplerKind::Kdpp, SamplerKind::Kmeanspp}) {
    BenchConfig cfg;
    cfg.kind = kind;
    cfg.k = 32;
    cfg.draws = 1000;
    cfg.seed = 3;
    r[kind] = qe_bench(data, cfg).pooled;
  }
  const auto& rnd = r[SamplerKind::WeightedRandom];
  const auto& dpp = r[SamplerKind::Kdpp];
  const auto& kpp = r[SamplerKind::Kmeanspp];
  const double g1 = gap_in_se(kpp.mean, kpp.std_error, dpp.mean, dpp.std_error);
  const double g2 = gap_in_se(dpp.mean, dpp.std_error, rnd.mean, rnd.std_error);
  return {g1 > 5.0 && g2 > 5.0,
          "kmeans++=" + fmt("%.1f", kpp.mean) + " kdpp=" + fmt("%.1f", dpp.mean) +
              " random=" + fmt("%.1f", rnd.mean) + " gaps=" + fmt("%.1f", g1) + "," +
              fmt("%.1f", g2) + " SE"};
}

Outcome mmd_trend() {
  SynthSpec spec;
  spec.num_domains = 3;
  spec.shift_scale = 1.0;
  spec.seed = 7;
  const auto data = generate_domains(spec);
  std::map<SamplerKind, MapeReport> r;
  for (auto kind : {SamplerKind::WeightedRandom, SamplerKind::Kdpp, SamplerKind::Kmeanspp}) {
    BenchConfig cfg;
    cfg.kind = kind;
    cfg.k = 32;
    cfg.draws = 1000;
    cfg.seed = 3;
    r[kind] = mmd_mape_bench(data, cfg).average;
  }
  const auto& rnd = r[SamplerKind::WeightedRandom];
  const auto& dpp = r[SamplerKind::Kdpp];
  const auto& kpp = r[SamplerKind::Kmeanspp];
  const double g1 = gap_in_se(dpp.mape, dpp.std_error, rnd.mape, rnd.std_error);
  const double g2 = gap_in_se(kpp.mape, kpp.std_error, rnd.mape, rnd.std_error);
  return {g1 > 3.0 && g2 > 3.0,
          "random=" + fmt("%.2f", rnd.mape) + "% kdpp=" + fmt("%.2f", dpp.mape) +
              "% kmeans++=" + fmt("%.2f", kpp.mape) + "% gaps=" + fmt("%.1f", g1) + "," +
              fmt("%.1f", g2) + " SE"};
}

Outcome kernel_properties() {
  const auto x = gaussian(500, 8, 11);
  const Matrix s = rbf_mixture_gram(x, GammaSet::defaults()).matrix();
  const double asym = (s - s.transpose()).cwiseAbs().maxCoeff();
  const bool diag = (s.diagonal().array() == 5.0).all();
  double min_dist2 = INFINITY;
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = i + 1; j < x.rows(); ++j) min_dist2 = std::min(min_dist2, (x.row(i) - x.row(j)).squaredNorm());
  Eigen::SelfAdjointEigenSolver<Matrix> es(s, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  const bool pass = asym <= 1e-12 && diag && lmin >= -1e-8 * 500 * 5 && min_dist2 > 1e-12 && lmin > 0.0;
  return {pass, "asym=" + fmt("%.1e", asym) + " lambda_min=" + fmt("%.4g", lmin)};
}

Outcome mmd_properties() {
  const GammaSet g = GammaSet::defaults();
  const auto a = gaussian(200, 4, 21), b = gaussian(150, 4, 22);
  const double self = mmd(a, a, g).value;
  const double asym = std::abs(mmd(a, b, g).value - mmd(b, a, g).value);
  FeatureMatrix p(1, 1), q(1, 1);
  p << 0;
  q << 1;
  const double two_point = mmd(p, q, GammaSet({1.0})).value;

  SynthSpec spec;
  spec.num_domains = 3;
  spec.per_domain = 1000;
  spec.seed = 5;
  const auto data = generate_domains(spec);
  BenchConfig small, large;
  small.k = 16;
  large.k = 64;
  small.draws = large.draws = 200;
  small.seed = large.seed = 8;
  const double e16 = mmd_mape_bench(data, small).average.mape;
  const double e64 = mmd_mape_bench(data, large).average.mape;

  const bool pass = self == 0.0 && asym <= 1e-12 && std::abs(two_point - 1.124385) <= 1e-6 &&
                    std::abs(two_point - std::sqrt(2.0 - 2.0 * std::exp(-1.0))) <= 1e-9 && e64 < e16;
  return {pass, "self=" + fmt("%g", self) + " two_point=" + fmt("%.9f", two_point) +
                    " mape k16=" + fmt("%.2f", e16) + " k64=" + fmt("%.2f", e64)};
}

Outcome kmeanspp_distribution() {
  FeatureMatrix line(4, 1);
  line << 0, 1, 2, 3;
  const std::vector<double> w{1, 2, 3, 4};
  Rng rng = substream(2024, 7);
  std::vector<std::size_t> first(4, 0);
  for (int r = 0; r < 100000; ++r) ++first[kmeanspp_sample(line, w, 1, rng)[0]];
  const double pval = oracle::chi_square_gof(first, {0.1, 0.2, 0.3, 0.4});

  FeatureMatrix three(3, 1);
  three << 0, 1, 3;
  const std::vector<double> ones(3, 1.0);
  const auto expected = oracle::kmeanspp_probabilities(to_dense(three), ones, 2);
  const bool oracle_ok = std::abs(expected.at({0, 2}) - 0.5308) < 1e-4 &&
                         std::abs(expected.at({1, 2}) - 0.3692) < 1e-4 &&
                         std::abs(expected.at({0, 1}) - 0.1) < 1e-12;
  const std::size_t draws = 100000;
  std::map<oracle::Index, std::size_t> counts;
  for (std::size_t r = 0; r < draws; ++r) ++counts[kmeanspp_sample(three, ones, 2, rng).indices()];
  const double z = oracle::max_multinomial_z(expected, counts, draws);
  return {pval > 0.001 && oracle_ok && z <= 4.0,
          "chi2 p=" + fmt("%.3f", pval) + " 3-point max|z|=" + fmt("%.3f", z)};
}

Outcome engine_contracts() {
  SynthSpec spec;
  spec.num_domains = 2;
  spec.per_domain = 300;
  spec.dim = 4;
  spec.seed = 9;
  const auto data = generate_domains(spec);

  auto cfg = [](SamplerKind kind) {
    EngineConfig c;
    c.kind = kind;
    c.batch_size = 16;
    c.seed = 42;
    return c;
  };

  bool replay = true;
  for (auto kind : {SamplerKind::Kdpp, SamplerKind::Kmeanspp}) {
    SamplerEngine diverse(cfg(kind), data);
    SamplerEngine plain(cfg(SamplerKind::WeightedRandom), data);
    for (int r = 0; r < 100; ++r)
      for (const char* tag : {"d0", "d1"}) replay &= diverse.next_minibatch(tag) == plain.next_minibatch(tag);
  }

  bool idempotent = true;
  for (auto kind : {SamplerKind::Kdpp, SamplerKind::Kmeanspp}) {
    SamplerEngine once(cfg(kind), data), twice(cfg(kind), data);
    once.refresh(data);
    twice.refresh(data);
    twice.refresh(data);
    for (std::uint64_t r = 0; r < 100; ++r)
      for (std::size_t d = 0; d < 2; ++d) idempotent &= once.draw(d, r) == twice.draw(d, r);
  }

  // every tenth instance carries zero weight
  std::vector<FeatureTable> tables;
  for (const auto& t : data) {
    auto w = t.weights();
    for (std::size_t i = 0; i < w.size(); i += 10) w[i] = 0.0;
    tables.push_back(t.with_weights(std::move(w)));
  }
  const DomainCollection masked(std::move(tables));
  bool zero_excluded = true;
  for (auto kind : {SamplerKind::WeightedRandom, SamplerKind::Kdpp, SamplerKind::Kmeanspp}) {
    auto c = cfg(kind);
    c.policy.warmup = false;
    const SamplerEngine engine(c, masked);
    for (std::uint64_t r = 0; r < 10000; ++r) {
      const auto s = engine.draw(r % 2, r);
      cardinality_ok &= kind != SamplerKind::Kdpp || s.size() == 16;
      for (std::size_t i : s) zero_excluded &= i % 10 != 0;
    }
  }
  return {replay && idempotent && zero_excluded,
          std::string("warmup replay ") + (replay ? "ok" : "MISMATCH") + ", refresh " +
              (idempotent ? "idempotent" : "NOT idempotent") + ", zero weights " +
              (zero_excluded ? "excluded" : "DRAWN")};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"k-DPP exactness", kdpp_exactness},
      {"eigen-phase marginals", eigen_marginals},
      {"QE ordering", qe_trend},
      {"MMD MAPE ordering", mmd_trend},
      {"kernel properties", kernel_properties},
      {"MMD properties", mmd_properties},
      {"k-means++ distribution", kmeanspp_distribution},
      {"engine contracts", engine_contracts},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%s] %zu %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
