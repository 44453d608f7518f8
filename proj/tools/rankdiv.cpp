// rankdiv: experiment harness and one-shot estimator.

#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rankdiv/experiments.hpp"

using namespace rankdiv;

namespace {

struct Sub {
  CLI::App* app = nullptr;
  std::string config_file;
  std::vector<std::string> overrides;
  std::map<std::string, std::string> flags;  // config key -> value given on the command line
};

void add_flag(Sub& s, const std::string& flag, const std::string& key, const std::string& help) {
  s.app->add_option_function<std::string>(flag, [&s, key](const std::string& v) { s.flags[key] = v; }, help);
}

Sub make_sub(CLI::App& app, const std::string& name, const std::string& help) {
  Sub s;
  s.app = app.add_subcommand(name, help);
  return s;
}

void add_common(Sub& s) {
  s.app->add_option("-c,--config", s.config_file, "key = value config file")->check(CLI::ExistingFile);
  s.app->add_option("-s,--set", s.overrides, "override a config key (key=value), repeatable");
}

Config build_config(const Sub& s, const std::string& default_output) {
  Config c = s.config_file.empty() ? Config{} : Config::from_file(s.config_file);
  for (const auto& [k, v] : s.flags) c.set(k, v);
  for (const auto& kv : s.overrides) c.set_assignment(kv);
  if (!default_output.empty() && !c.has("output")) c.set("output", default_output);
  return c;
}

void print_bench1d(const Bench1dResult& r) {
  std::printf("%-12s %-10s %8s %6s %12s %12s %10s %10s\n", "family", "kind", "param", "K", "reference", "route",
              "ratio", "std");
  for (const auto& row : r.rows)
    std::printf("%-12s %-10s %8g %6d %12.6g %12s %10.4f %10.4f\n", row.c.family.c_str(),
                std::string(to_string(row.c.kind)).c_str(), row.c.param, row.K, row.reference,
                row.reference_route.c_str(), row.mean_ratio, row.std_ratio);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rank-statistic f-divergence estimation and rank-proximal transport"};
  app.require_subcommand(1);
  app.set_version_flag("--version", version_string());

  Sub bench1d = make_sub(app, "bench1d", "univariate estimate/reference table over K");
  add_common(bench1d);
  add_flag(bench1d, "--output", "output", "summary CSV path");
  add_flag(bench1d, "--seeds", "seeds", "number of seeds R");

  Sub sliced = make_sub(app, "bench-sliced", "sliced estimator, d * sliced / reference");
  add_common(sliced);
  add_flag(sliced, "--output", "output", "summary CSV path");
  add_flag(sliced, "--per-slice", "per_slice_output", "per-slice CSV path");
  add_flag(sliced, "--seeds", "seeds", "number of seeds R");

  Sub klvsn = make_sub(app, "kl-vs-n", "axis-corrected KL against sample size on the box benchmarks");
  add_common(klvsn);
  add_flag(klvsn, "--output", "output", "CSV path");
  add_flag(klvsn, "--seeds", "seeds", "number of seeds R");

  Sub rates = make_sub(app, "rates", "noise-free D^(K) gaps and fitted log-log slopes");
  add_common(rates);
  add_flag(rates, "--output", "output", "per-K CSV path");
  add_flag(rates, "--fit-output", "fit_output", "slope CSV path");

  Sub bounds = make_sub(app, "bounds", "finite-sample mean bound and concentration coverage");
  add_common(bounds);
  add_flag(bounds, "--output", "output", "report CSV path");

  Sub transport = make_sub(app, "transport", "particle transport towards a 2D toy target");
  add_common(transport);
  for (const auto& [flag, key] : std::vector<std::pair<std::string, std::string>>{
           {"--target", "target"}, {"--algo", "algo"}, {"--steps", "steps"}, {"--snapshots", "snapshots"},
           {"--K-start", "K_start"}, {"--K-end", "K_end"}, {"--tau-start", "tau_start"}, {"--tau-end", "tau_end"},
           {"--eps-start", "eps_start"}, {"--eps-end", "eps_end"}, {"--eta", "eta"}, {"--inner-steps", "inner_steps"},
           {"--inner-lr", "inner_lr"}, {"--clip", "clip"}, {"--L", "L"}, {"--beta", "beta"}, {"--kind", "kind"},
           {"--seed", "seed"}, {"--output-dir", "output_dir"}, {"--tag", "tag"}})
    add_flag(transport, flag, key, key);

  Sub estimate = make_sub(app, "estimate", "estimate a divergence from two CSV sample files");
  add_common(estimate);
  std::string mu_file, nu_file, histogram_file;
  estimate.app->add_option("mu", mu_file, "samples of mu (rows = samples, columns = coordinates)")
      ->required()
      ->check(CLI::ExistingFile);
  estimate.app->add_option("nu", nu_file, "samples of nu")->required()->check(CLI::ExistingFile);
  estimate.app->add_option("--histogram", histogram_file, "write the rank histogram as JSON (univariate mode)");
  for (const auto& [flag, key] : std::vector<std::pair<std::string, std::string>>{
           {"--K", "K"}, {"--kind", "kind"}, {"--route", "route"}, {"--tau", "tau"}, {"--seed", "seed"},
           {"--mode", "mode"}, {"--L", "L"}, {"--output", "output"}})
    add_flag(estimate, flag, key, key);

  CLI11_PARSE(app, argc, argv);

  try {
    if (bench1d.app->parsed()) {
      auto c = build_config(bench1d, "bench1d.csv");
      print_bench1d(run_bench1d(c));
    } else if (sliced.app->parsed()) {
      auto c = build_config(sliced, "bench_sliced.csv");
      const auto r = run_bench_sliced(c);
      std::printf("%-12s %-10s %8s %4s %6s %12s %14s %10s %10s\n", "family", "kind", "param", "d", "K", "reference",
                  "route", "ratio", "std");
      for (const auto& row : r.rows)
        std::printf("%-12s %-10s %8g %4zu %6d %12.6g %14s %10.4f %10.4f\n", row.c.family.c_str(),
                    std::string(to_string(row.c.kind)).c_str(), row.c.param, row.d, row.K, row.reference,
                    row.reference_route.c_str(), row.mean_ratio, row.std_ratio);
    } else if (klvsn.app->parsed()) {
      auto c = build_config(klvsn, "kl_vs_n.csv");
      const auto r = run_kl_vs_n(c);
      std::printf("%4s %10s %12s %12s %12s\n", "d", "n", "mean", "std", "truth");
      for (const auto& row : r.rows)
        std::printf("%4zu %10zu %12.6f %12.6f %12.6f\n", row.d, row.n, row.mean, row.std, row.truth);
    } else if (rates.app->parsed()) {
      auto c = build_config(rates, "rates.csv");
      if (!c.has("fit_output")) c.set("fit_output", "rates_fit.csv");
      const auto r = run_rates(c);
      for (const auto& f : r.fits)
        std::printf("%-12s %-10s %8g  slope %.4f over K in [%d, %d]\n", f.c.family.c_str(),
                    std::string(to_string(f.c.kind)).c_str(), f.c.param, f.slope, f.K_min, f.K_max);
    } else if (bounds.app->parsed()) {
      auto c = build_config(bounds, "bounds.csv");
      const auto r = run_bounds(c);
      std::printf("mean |error| %.6g vs bound %.6g (%s)\n", r.mean_abs_error, r.mean_bound,
                  r.mean_ok ? "ok" : "violated");
      std::printf("coverage %.4f at radius %.6g, delta %.3g (%s)\n", r.coverage, r.radius, r.delta,
                  r.coverage_ok ? "ok" : "violated");
    } else if (transport.app->parsed()) {
      auto c = build_config(transport, "");
      const auto r = run_transport_cli(c);
      if (!r.run.trace.empty())
        std::printf("energy %.6g -> %.6g over %zu steps\n", r.run.trace.front().energy, r.run.trace.back().energy,
                    r.run.trace.size() - 1);
      for (const auto& f : r.files) std::printf("wrote %s\n", f.string().c_str());
    } else if (estimate.app->parsed()) {
      auto c = build_config(estimate, "");
      const auto r = run_estimate(c, read_samples_csv(mu_file), read_samples_csv(nu_file));
      nlohmann::json j{{"mode", r.mode},
                       {"dim", r.dim},
                       {"kind", std::string(to_string(r.estimate.entropy))},
                       {"K", r.estimate.K},
                       {"provenance", std::string(to_string(r.estimate.provenance))},
                       {"n_mu", r.estimate.n_mu},
                       {"n_nu", r.estimate.n_nu},
                       {"estimate", r.estimate.value}};
      std::cout << j.dump() << "\n";
      if (!histogram_file.empty()) {
        if (!r.histogram) throw ConfigError("--histogram needs univariate mode");
        std::ofstream f(histogram_file);
        if (!f) throw ConfigError("cannot write " + histogram_file);
        f << to_json(*r.histogram).dump() << "\n";
      }
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
