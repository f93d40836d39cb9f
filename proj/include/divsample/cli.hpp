#pragma once

// Command-line front end. Subcommands:
//
//   gen-data    write a synthetic multi-domain Feature CSV
//   sample      dump sampled minibatches as JSON lines
//   qe-bench    quantisation-error benchmark report (CSV)
//   mmd-bench   MAPE of small-sample MMD estimates report (CSV)
//   dpp-verify  k-DPP empirical vs exact subset probabilities (CSV)
//
// Exit codes: 0 success, 1 runtime/validation failure, 2 usage error.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "divsample/dpp_sampler.hpp"
#include "divsample/feature_store.hpp"
#include "divsample/kernels.hpp"
#include "divsample/metrics.hpp"
#include "divsample/random.hpp"
#include "divsample/sampler_engine.hpp"
#include "divsample/synth.hpp"

namespace divsample::cli {

using nlohmann::ordered_json;

/// Seeded uniform subsample (original order kept) of every domain larger than `cap`.
inline DomainCollection cap_instances(const DomainCollection& collection, std::size_t cap,
                                      std::uint64_t seed) {
  std::vector<FeatureTable> out;
  for (std::size_t d = 0; d < collection.size(); ++d) {
    const auto& t = collection[d];
    if (t.n() <= cap) {
      out.push_back(t);
      continue;
    }
    Rng rng = substream(seed, hash_tag("instance-cap"), d);
    std::vector<std::size_t> idx(t.n());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < cap; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
      std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(cap);
    out.push_back(t.select(Subset(std::move(idx))));
  }
  return DomainCollection(std::move(out));
}

struct InputOptions {
  std::string features;
  bool zscore = false;
  bool class_weights = false;
  std::optional<std::size_t> max_instances;
  std::string gammas = GammaSet::defaults().to_string();
};

inline DomainCollection prepare_input(const InputOptions& in, std::uint64_t seed) {
  DomainCollection c = load_feature_table(in.features);
  if (in.max_instances) c = cap_instances(c, *in.max_instances, seed);
  if (in.class_weights) {
    std::vector<FeatureTable> tables;
    for (const auto& t : c) tables.push_back(t.with_weights(class_balance_weights(t)));
    c = DomainCollection(std::move(tables));
  }
  if (in.zscore) c = zscore(c);
  return c;
}

inline void add_input_options(CLI::App* cmd, InputOptions& in) {
  cmd->add_option("--features", in.features, "Feature CSV (id,domain,label[,weight],f0,...)")
      ->required();
  cmd->add_option("--gammas", in.gammas, "Comma-separated RBF bandwidths")
      ->capture_default_str();
  cmd->add_flag("--zscore", in.zscore, "Z-score every dimension (pooled across domains)");
  cmd->add_flag("--class-weights", in.class_weights,
                "Replace weights with inverse class-frequency weights");
  cmd->add_option("--max-instances", in.max_instances,
                  "Seeded subsample of each domain down to this many instances");
}

inline ordered_json input_config(const InputOptions& in) {
  ordered_json j;
  j["features"] = in.features;
  j["gammas"] = in.gammas;
  j["zscore"] = in.zscore;
  j["class_weights"] = in.class_weights;
  j["max_instances"] = in.max_instances ? ordered_json(*in.max_instances) : ordered_json(nullptr);
  return j;
}

inline void write_sidecar(const std::string& path, const ordered_json& config) {
  std::ofstream out(path + ".config.json");
  if (!out) throw ValidationError("cannot write config sidecar for '" + path + "'");
  out << config.dump(2) << '\n';
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open '" + path + "' for writing");
  return out;
}

struct ReportRow {
  std::string domain_or_pair;
  std::string metric;
  double mean;
  double std_error;
};

inline void write_report(std::ostream& out, const ordered_json& config, std::string_view sampler,
                         const std::vector<ReportRow>& rows, std::size_t draws, std::size_t k,
                         std::uint64_t seed) {
  out << "# " << config.dump() << '\n';
  out << "sampler,domain_or_pair,metric,mean,stderr,draws,k,seed\n";
  for (const auto& r : rows)
    out << sampler << ',' << r.domain_or_pair << ',' << r.metric << ','
        << detail::format_double(r.mean) << ',' << detail::format_double(r.std_error) << ','
        << draws << ',' << k << ',' << seed << '\n';
}

inline std::string subset_label(const Subset& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(s[i]);
  }
  return out;
}

struct DppVerifyResult {
  double max_abs_z = 0.0;
  double total_probability = 0.0;
  bool pass = false;
};

/// Draws `draws` k-DPP subsets from a random strictly-PD kernel on n points and
/// compares subset frequencies to det(L_A) / e_k. Prints one CSV row per subset.
inline DppVerifyResult dpp_verify(std::size_t n, std::size_t k, std::size_t draws,
                                  std::uint64_t seed, std::ostream& out) {
  if (n < 1 || n > 20) throw ValidationError("dpp-verify needs 1 <= n <= 20");
  if (k < 1 || k > n) throw ValidationError("dpp-verify needs 1 <= k <= n");
  if (draws < 1) throw ValidationError("dpp-verify needs at least one draw");

  Rng point_rng = substream(seed, hash_tag("dpp-verify-points"));
  std::normal_distribution<double> normal(0.0, 1.0);
  FeatureMatrix x(static_cast<Eigen::Index>(n), 3);
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < 3; ++j) x(i, j) = normal(point_rng);
  const auto kernel = LikelihoodKernel::from_matrix(rbf_mixture_gram(x, GammaSet::defaults()).matrix());
  const KdppSampler sampler(kernel, k);

  std::map<Subset, std::size_t> counts;
  Rng draw_rng = substream(seed, hash_tag("dpp-verify-draws"));
  for (std::size_t r = 0; r < draws; ++r) ++counts[sampler(draw_rng)];

  // enumerate all size-k subsets in lexicographic order
  DppVerifyResult result;
  out << "subset,expected,empirical,count,z\n";
  std::vector<std::size_t> idx(k);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const double normalizer = sampler.esp().normalizer();
  const double total = static_cast<double>(draws);
  while (true) {
    const Subset s(idx);
    const double p = kdpp_subset_probability(kernel.matrix(), s, normalizer);
    const auto it = counts.find(s);
    const std::size_t c = it == counts.end() ? 0 : it->second;
    const double sigma = std::sqrt(total * p * (1.0 - p));
    const double z = sigma > 0.0 ? (static_cast<double>(c) - total * p) / sigma
                                 : (c == static_cast<std::size_t>(std::llround(total * p)) ? 0.0 : INFINITY);
    result.total_probability += p;
    result.max_abs_z = std::max(result.max_abs_z, std::abs(z));
    out << subset_label(s) << ',' << detail::format_double(p) << ','
        << detail::format_double(static_cast<double>(c) / total) << ',' << c << ','
        << detail::format_double(z) << '\n';

    std::size_t pos = k;
    while (pos > 0 && idx[pos - 1] == n - k + pos - 1) --pos;
    if (pos == 0) break;
    ++idx[pos - 1];
    for (std::size_t q = pos; q < k; ++q) idx[q] = idx[q - 1] + 1;
  }
  result.pass = result.max_abs_z <= 4.0 && std::abs(result.total_probability - 1.0) <= 1e-10;
  out << "# max_abs_z=" << detail::format_double(result.max_abs_z)
      << ",total_probability=" << detail::format_double(result.total_probability)
      << ",pass=" << (result.pass ? "true" : "false") << '\n';
  return result;
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Diversity-based minibatch sampling: k-DPP and k-means++ samplers with "
               "quantisation-error and MMD benchmarks"};
  app.name("divsample");
  app.require_subcommand(1);

  // gen-data
  SynthSpec synth;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen-data", "Write a synthetic multi-domain Feature CSV");
  gen->add_option("--out", gen_out, "Output CSV path")->required();
  gen->add_option("--domains", synth.num_domains, "Number of domains")->capture_default_str();
  gen->add_option("--per-domain", synth.per_domain, "Instances per domain")->capture_default_str();
  gen->add_option("--dim", synth.dim, "Feature dimension")->capture_default_str();
  gen->add_option("--subgroups", synth.subgroups, "Gaussian subgroups shared by all domains")
      ->capture_default_str();
  gen->add_option("--shift", synth.shift_scale, "Norm of each domain's mean offset")
      ->capture_default_str();
  gen->add_option("--imbalance", synth.imbalance,
                  "Subgroup-proportion skew in [0,1); 0 gives uniform proportions")
      ->capture_default_str();
  gen->add_option("--spread", synth.cluster_spread, "Within-subgroup standard deviation")
      ->capture_default_str();
  gen->add_option("--seed", synth.seed, "Random seed")->required();

  // sample
  InputOptions sample_in;
  std::string sample_kind, sample_out;
  std::size_t sample_k = 32, sample_draws = 1;
  std::uint64_t sample_seed = 0;
  auto* sample = app.add_subcommand("sample", "Draw minibatches and dump them as JSON lines");
  add_input_options(sample, sample_in);
  sample->add_option("--sampler", sample_kind, "random | kdpp | kmeanspp")
      ->required()
      ->check(CLI::IsMember({"random", "kdpp", "kmeanspp"}));
  sample->add_option("--k", sample_k, "Batch size per domain")->capture_default_str();
  sample->add_option("--draws", sample_draws, "Draws per domain")->capture_default_str();
  sample->add_option("--seed", sample_seed, "Random seed")->required();
  sample->add_option("--out", sample_out, "Output JSON-lines path")->required();

  // qe-bench / mmd-bench share a flag set
  struct BenchCli {
    InputOptions in;
    std::string kind, out;
    std::size_t k = 32, draws = 1000;
    std::uint64_t seed = 0;
  };
  BenchCli qe_opts, mmd_opts;
  auto add_bench = [&](const char* name, const char* help, BenchCli& b) {
    auto* cmd = app.add_subcommand(name, help);
    add_input_options(cmd, b.in);
    cmd->add_option("--sampler", b.kind, "random | kdpp | kmeanspp")
        ->required()
        ->check(CLI::IsMember({"random", "kdpp", "kmeanspp"}));
    cmd->add_option("--k", b.k, "Batch size per domain")->capture_default_str();
    cmd->add_option("--draws", b.draws, "Independent draws per domain")->capture_default_str();
    cmd->add_option("--seed", b.seed, "Random seed")->required();
    cmd->add_option("--out", b.out, "Report CSV path")->required();
    return cmd;
  };
  auto* qe = add_bench("qe-bench", "Quantisation error of sampled subsets", qe_opts);
  auto* mmdb = add_bench("mmd-bench", "MAPE of small-sample inter-domain MMD estimates", mmd_opts);

  // dpp-verify
  std::size_t verify_n = 6, verify_k = 2, verify_draws = 200000;
  std::uint64_t verify_seed = 0;
  std::string verify_out;
  auto* verify = app.add_subcommand("dpp-verify",
                                    "Compare k-DPP subset frequencies with exact probabilities");
  verify->add_option("--n", verify_n, "Ground-set size (<= 20)")->capture_default_str();
  verify->add_option("--k", verify_k, "Subset size")->capture_default_str();
  verify->add_option("--draws", verify_draws, "Number of draws")->capture_default_str();
  verify->add_option("--seed", verify_seed, "Random seed")->required();
  verify->add_option("--out", verify_out, "Write the table here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  try {
    if (*gen) {
      ordered_json cfg;
      cfg["subcommand"] = "gen-data";
      cfg["out"] = gen_out;
      cfg["domains"] = synth.num_domains;
      cfg["per_domain"] = synth.per_domain;
      cfg["dim"] = synth.dim;
      cfg["subgroups"] = synth.subgroups;
      cfg["shift"] = synth.shift_scale;
      cfg["imbalance"] = synth.imbalance;
      cfg["spread"] = synth.cluster_spread;
      cfg["seed"] = synth.seed;
      write_feature_table(gen_out, generate_domains(synth));
      write_sidecar(gen_out, cfg);
      return 0;
    }

    if (*sample) {
      const auto collection = prepare_input(sample_in, sample_seed);
      EngineConfig ec;
      ec.kind = parse_sampler_kind(sample_kind);
      ec.batch_size = sample_k;
      ec.policy.warmup = false;
      ec.gammas = GammaSet::parse(sample_in.gammas);
      ec.seed = sample_seed;
      const SamplerEngine engine(ec, collection);

      ordered_json cfg = input_config(sample_in);
      cfg["subcommand"] = "sample";
      cfg["sampler"] = sample_kind;
      cfg["k"] = sample_k;
      cfg["draws"] = sample_draws;
      cfg["seed"] = sample_seed;
      cfg["out"] = sample_out;

      auto file = open_output(sample_out);
      for (std::size_t r = 0; r < sample_draws; ++r)
        for (std::size_t d = 0; d < engine.num_domains(); ++d) {
          ordered_json line;
          line["draw"] = r;
          line["domain"] = engine.table(d).domain();
          line["indices"] = engine.draw(d, r).indices();
          file << line.dump() << '\n';
        }
      write_sidecar(sample_out, cfg);
      return 0;
    }

    auto bench_setup = [](const char* name, const BenchCli& b) {
      ordered_json cfg = input_config(b.in);
      cfg["subcommand"] = name;
      cfg["sampler"] = b.kind;
      cfg["k"] = b.k;
      cfg["draws"] = b.draws;
      cfg["seed"] = b.seed;
      cfg["out"] = b.out;
      BenchConfig bc;
      bc.kind = parse_sampler_kind(b.kind);
      bc.k = b.k;
      bc.draws = b.draws;
      bc.gammas = GammaSet::parse(b.in.gammas);
      bc.seed = b.seed;
      return std::pair{cfg, bc};
    };

    if (*qe) {
      const auto [cfg, bc] = bench_setup("qe-bench", qe_opts);
      const auto report = qe_bench(prepare_input(qe_opts.in, qe_opts.seed), bc);
      std::vector<ReportRow> rows;
      for (std::size_t d = 0; d < report.domains.size(); ++d)
        rows.push_back({report.domains[d], "qe", report.per_domain[d].mean,
                        report.per_domain[d].std_error});
      rows.push_back({"pooled", "qe", report.pooled.mean, report.pooled.std_error});
      auto file = open_output(qe_opts.out);
      write_report(file, cfg, qe_opts.kind, rows, bc.draws, bc.k, bc.seed);
      return 0;
    }

    if (*mmdb) {
      const auto [cfg, bc] = bench_setup("mmd-bench", mmd_opts);
      const auto report = mmd_mape_bench(prepare_input(mmd_opts.in, mmd_opts.seed), bc);
      std::vector<ReportRow> rows;
      auto emit = [&rows](const std::string& name, const MapeReport& m) {
        const auto est = mean_stderr(m.estimates);
        rows.push_back({name, "mape", m.mape, m.std_error});
        rows.push_back({name, "mmd_truth", m.ground_truth, 0.0});
        rows.push_back({name, "mmd_estimate", est.mean, est.std_error});
      };
      for (const auto& p : report.pairs) emit(p.a + "|" + p.b, p.report);
      emit("average", report.average);
      auto file = open_output(mmd_opts.out);
      write_report(file, cfg, mmd_opts.kind, rows, bc.draws, bc.k, bc.seed);
      return 0;
    }

    if (*verify) {
      DppVerifyResult r;
      if (verify_out.empty()) {
        r = dpp_verify(verify_n, verify_k, verify_draws, verify_seed, out);
      } else {
        auto file = open_output(verify_out);
        r = dpp_verify(verify_n, verify_k, verify_draws, verify_seed, file);
      }
      if (!r.pass) err << "dpp-verify: empirical frequencies outside 4 sigma\n";
      return r.pass ? 0 : 1;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace divsample::cli
