// Experiment front door: parses a JSON config (or subcommand defaults plus
// overrides), fans the (R, p, seed) grid out through the library, and emits
// results.csv + summary.json with a content hash for replay verification.
// Exit status is 0 iff the config validates and no cell errored.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "smallcap/decoupling.hpp"
#include "smallcap/highlow.hpp"
#include "smallcap/io.hpp"
#include "smallcap/wave_packets.hpp"

using namespace smallcap;

namespace {

QuadratureSpec make_quad(const AtomicSignal& F, const ExperimentConfig& cfg, double p,
                         std::uint64_t seed) {
  const int n = F.n();
  const double Rv = static_cast<double>(F.scale.R);
  std::string q = cfg.quad;
  const bool even_p = std::abs(p / 2.0 - std::round(p / 2.0)) < 1e-12;
  if (q == "auto") q = (F.lattice_period && even_p) ? "lattice" : "mc";
  QuadratureSpec spec;
  spec.seed = seed;
  spec.samples = cfg.samples;
  if (q == "lattice") {
    spec.mode = QuadMode::lattice_exact;
    spec.region = Region::period_box(n, F.lattice_period.value_or(1.0));
  } else if (q == "grid") {
    spec.mode = QuadMode::uniform_grid;
    spec.region = Region::box_at(Vec(static_cast<std::size_t>(n), 0.0), Rv);
  } else {
    spec.mode = QuadMode::monte_carlo;
    spec.region = Region::ball_at(Vec(static_cast<std::size_t>(n), 0.0), Rv);
  }
  return spec;
}

AtomicSignal make_signal(const ExperimentConfig& cfg, const Scale& R,
                         std::uint64_t seed) {
  AlphaVector a = AlphaVector::of(cfg.alpha);
  return cfg.family == "constant" ? synth_constant(a, R) : synth_random(a, R, seed);
}

struct RunOutput {
  CsvTable table;
  json extra;  // kind-specific summary fields
  std::vector<std::string> errors;
};

RunOutput run_caps(const ExperimentConfig& cfg) {
  RunOutput out;
  out.table.header = {"R", "alpha", "kind", "corner", "lo", "width"};
  for (std::uint64_t Rv : cfg.R_list) {
    CapCollection cc = enumerate_caps(AlphaVector::of(cfg.alpha), Scale::of(Rv));
    for (const Cap& c : cc.caps) {
      std::string corner, lo, width;
      for (int i = 0; i < c.n() - 1; ++i) {
        if (i) corner += ';', lo += ';', width += ';';
        corner += std::to_string(c.corner[static_cast<std::size_t>(i)]);
        lo += format_double(c.lo(i));
        width += format_double(c.width(i));
      }
      out.table.add_row({std::to_string(Rv), alpha_label(cc.alpha), "small", corner,
                         lo, width});
    }
  }
  return out;
}

RunOutput run_synth(const ExperimentConfig& cfg) {
  RunOutput out;
  out.table.header = {"R", "seed", "family", "atoms", "sum_sq_amp", "lattice_period"};
  for (std::uint64_t Rv : cfg.R_list)
    for (std::uint64_t seed : cfg.seeds) {
      AtomicSignal F = make_signal(cfg, Scale::of(Rv), seed);
      out.table.add_row({std::to_string(Rv), std::to_string(seed), cfg.family,
                         std::to_string(F.atoms.size()),
                         format_double(F.sum_sq_amp()),
                         F.lattice_period ? format_double(*F.lattice_period) : ""});
      const std::string name =
          "signal_R" + std::to_string(Rv) + "_seed" + std::to_string(seed) + ".json";
      write_file((std::filesystem::path(cfg.out_dir) / name).string(),
                 signal_to_json(F).dump(2) + "\n");
    }
  return out;
}

RunOutput run_norm(const ExperimentConfig& cfg) {
  RunOutput out;
  out.table = quadrature_csv();  // R,p,mode,samples,value,flags
  for (std::uint64_t Rv : cfg.R_list)
    for (double p : cfg.p_list)
      for (std::uint64_t seed : cfg.seeds) {
        AtomicSignal F = make_signal(cfg, Scale::of(Rv), seed);
        QuadratureSpec q = make_quad(F, cfg, p, seed);
        std::string mode = q.mode == QuadMode::lattice_exact ? "lattice-exact"
                           : q.mode == QuadMode::uniform_grid ? "uniform-grid"
                                                              : "monte-carlo";
        std::string value, flags;
        try {
          NormResult r = lp_norm(F, p, q);
          value = format_double(r.value);
          flags = r.warning ? r.note : "";
          if (!std::isfinite(r.value)) throw std::runtime_error("non-finite norm");
        } catch (const std::exception& ex) {
          flags = std::string("error:") + ex.what();
          out.errors.push_back(ex.what());
        }
        out.table.add_row({std::to_string(Rv), format_double(p), mode,
                           std::to_string(q.samples), value, flags});
      }
  return out;
}

RunOutput run_decouple(const ExperimentConfig& cfg) {
  RunOutput out;
  std::vector<DecouplingReport> reports;
  json slopes = json::object();
  for (double p : cfg.p_list) {
    std::vector<std::pair<double, double>> curve;
    for (std::uint64_t Rv : cfg.R_list)
      for (std::uint64_t seed : cfg.seeds) {
        try {
          AtomicSignal F = make_signal(cfg, Scale::of(Rv), seed);
          QuadratureSpec q = make_quad(F, cfg, p, seed);
          DecouplingReport rep = decoupling_ratio(F, p, q, cfg.family);
          curve.push_back({static_cast<double>(Rv), rep.ratio});
          reports.push_back(std::move(rep));
        } catch (const std::exception& ex) {
          out.errors.push_back(ex.what());
        }
      }
    if (curve.size() >= 3) {
      FitResult fit = fit_exponent(curve);
      const double pred = AlphaVector::of(cfg.alpha).weight() * (0.5 - 1.0 / p);
      json s = fit_to_json(fit);
      s["predicted_exponent"] = pred;
      s["within_bound"] = fit.slope <= pred + 0.1;
      slopes["p=" + format_double(p)] = s;
    }
  }
  out.table = decoupling_csv(reports);
  out.extra["slopes"] = slopes;
  return out;
}

RunOutput run_multilinear(const ExperimentConfig& cfg) {
  RunOutput out;
  out.table.header = {"R", "p", "seed", "transversality", "lhs", "rhs_core", "ratio"};
  const int n = cfg.n;
  for (std::uint64_t Rv : cfg.R_list)
    for (double p : cfg.p_list)
      for (std::uint64_t seed : cfg.seeds) {
        try {
          AtomicSignal F = make_signal(cfg, Scale::of(Rv), seed);
          // n transverse pieces: equal slices of the first base coordinate
          std::vector<AtomicSignal> parts(static_cast<std::size_t>(n));
          for (auto& g : parts) {
            g.scale = F.scale;
            g.alpha = F.alpha;
            g.lattice_period = F.lattice_period;
          }
          for (const auto& atom : F.atoms) {
            int k = static_cast<int>(std::floor((atom.xi[0] + 1.0) / 2.0 *
                                                static_cast<double>(n)));
            k = std::max(0, std::min(n - 1, k));
            parts[static_cast<std::size_t>(k)].atoms.push_back(atom);
          }
          QuadratureSpec q = make_quad(F, cfg, p, seed);
          if (q.mode == QuadMode::lattice_exact) {
            q.mode = QuadMode::monte_carlo;  // geometric means need point samples
            q.region = Region::ball_at(Vec(static_cast<std::size_t>(n), 0.0),
                                       static_cast<double>(Rv));
          }
          MultilinearReport rep = multilinear_ratio(parts, 1e-4, p, q, seed);
          out.table.add_row({std::to_string(Rv), format_double(p),
                             std::to_string(seed), format_double(rep.transversality),
                             format_double(rep.lhs), format_double(rep.rhs_core),
                             format_double(rep.ratio)});
        } catch (const std::exception& ex) {
          out.errors.push_back(ex.what());
        }
      }
  return out;
}

RunOutput run_packets(const ExperimentConfig& cfg) {
  RunOutput out;
  out.table.header = {"R", "seed", "rel_l2_error", "energy_ratio", "tubes"};
  bool all_ok = true;
  for (std::uint64_t Rv : cfg.R_list)
    for (std::uint64_t seed : cfg.seeds) {
      try {
        AtomicSignal F = make_signal(cfg, Scale::of(Rv), seed);
        const int n = cfg.n;
        RoundtripAudit audit = packet_roundtrip_audit(
            F, Vec(static_cast<std::size_t>(n), 0.0), static_cast<double>(Rv), 256,
            seed);
        all_ok = all_ok && audit.rel_l2_error <= 1e-2 && audit.energy_ratio >= 0.5 &&
                 audit.energy_ratio <= 2.0;
        out.table.add_row({std::to_string(Rv), std::to_string(seed),
                           format_double(audit.rel_l2_error),
                           format_double(audit.energy_ratio),
                           std::to_string(audit.tube_count)});
      } catch (const std::exception& ex) {
        out.errors.push_back(ex.what());
        all_ok = false;
      }
    }
  out.extra["packets_within_tolerance"] = all_ok;
  return out;
}

RunOutput run_incidence(const ExperimentConfig& cfg) {
  RunOutput out;
  out.table = audit_csv();  // family_hash,parameters,quantity,measured,bound,ratio
  double worst = 0;
  for (std::uint64_t Rv : cfg.R_list)
    for (std::uint64_t seed : cfg.seeds) {
      try {
        SyntheticTubeFamily fam =
            build_family(cfg.n, Scale::of(Rv), AlphaVector::of(cfg.alpha),
                         cfg.thetas_frac, cfg.tubes_per_theta, cfg.placement, seed);
        const json fj = family_to_json(fam);
        const std::string hash = content_hash(fj.dump());
        const std::string name = "family_" + hash + ".json";
        write_file((std::filesystem::path(cfg.out_dir) / name).string(),
                   fj.dump(2) + "\n");
        std::string params = "n=" + std::to_string(cfg.n) + ";R=" + std::to_string(Rv) +
                             ";alpha=" + alpha_label(fam.alpha) +
                             ";placement=" + cfg.placement +
                             ";seed=" + std::to_string(seed);
        for (const IncidenceRow& row : incidence_audit(fam)) {
          worst = std::max(worst, row.ratio);
          out.table.add_row({hash, params, "Q_r:r=" + std::to_string(row.r),
                             std::to_string(row.measured), format_double(row.bound),
                             format_double(row.ratio)});
        }
      } catch (const std::exception& ex) {
        out.errors.push_back(ex.what());
      }
    }
  out.extra["max_incidence_ratio"] = worst;
  out.extra["incidence_within_bound"] = worst <= 32.0;
  return out;
}

RunOutput run_audit_exponents(const ExperimentConfig& cfg) {
  RunOutput out;
  out.table.header = {"R", "p", "left", "right", "gap", "pass"};
  bool all_pass = true;
  AlphaVector a = AlphaVector::of(cfg.alpha);
  for (double p : cfg.p_list) {
    auto rows = restriction_exponent_audit(a, cfg.R_list, p);
    for (const auto& row : rows) {
      all_pass = all_pass && row.pass;
      out.table.add_row({format_double(row.R), format_double(p),
                         format_double(row.left), format_double(row.right),
                         format_double(row.gap), row.pass ? "1" : "0"});
    }
  }
  out.extra["exponent_audit_pass"] = all_pass;
  return out;
}

int run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  std::filesystem::create_directories(cfg.out_dir);
  RunOutput out;
  if (cfg.kind == "caps") out = run_caps(cfg);
  else if (cfg.kind == "synth") out = run_synth(cfg);
  else if (cfg.kind == "norm") out = run_norm(cfg);
  else if (cfg.kind == "decouple") out = run_decouple(cfg);
  else if (cfg.kind == "multilinear") out = run_multilinear(cfg);
  else if (cfg.kind == "packets") out = run_packets(cfg);
  else if (cfg.kind == "incidence") out = run_incidence(cfg);
  else if (cfg.kind == "audit-exponents") out = run_audit_exponents(cfg);
  else throw std::invalid_argument("run: kind '" + cfg.kind + "' is not runnable here");

  const std::string csv = out.table.to_string();
  write_file((std::filesystem::path(cfg.out_dir) / "results.csv").string(), csv);
  json summary;
  summary["config"] = config_to_json(cfg);
  summary["csv_hash"] = content_hash(csv);
  summary["rows"] = out.table.rows.size();
  summary["errors"] = out.errors;
  summary["pass"] = out.errors.empty();
  for (auto it = out.extra.begin(); it != out.extra.end(); ++it)
    summary[it.key()] = it.value();
  write_file((std::filesystem::path(cfg.out_dir) / "summary.json").string(),
             summary.dump(2) + "\n");
  std::cout << cfg.kind << ": " << out.table.rows.size() << " rows, csv hash "
            << summary["csv_hash"].get<std::string>()
            << (out.errors.empty() ? "" : ", ERRORS: " +
                                              std::to_string(out.errors.size()))
            << "\n";
  return out.errors.empty() ? 0 : 1;
}

int run_regress(const std::string& csv_path, const std::string& xcol,
                const std::string& ycol, const std::string& out_path) {
  auto table = parse_csv(read_file(csv_path));
  auto xs = csv_column(table, xcol);
  auto ys = csv_column(table, ycol);
  if (xs.size() != ys.size() || xs.size() < 3)
    throw std::invalid_argument("regress: need >= 3 aligned rows");
  std::vector<std::pair<double, double>> samples;
  for (std::size_t i = 0; i < xs.size(); ++i) samples.push_back({xs[i], ys[i]});
  FitResult fit = fit_exponent(samples);
  json j = fit_to_json(fit);
  j["x"] = xcol;
  j["y"] = ycol;
  j["rows"] = xs.size();
  std::cout << "slope " << format_double(fit.slope) << " intercept "
            << format_double(fit.intercept) << " max_residual "
            << format_double(fit.max_residual) << "\n";
  if (!out_path.empty()) write_file(out_path, j.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"small-cap decoupling numerical laboratory"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::vector<std::uint64_t> R_override;
  std::vector<double> p_override;
  std::vector<std::uint64_t> seed_override;

  const char* kinds[] = {"caps",      "synth",   "norm",    "decouple",
                         "multilinear", "packets", "incidence", "audit-exponents"};
  std::vector<CLI::App*> subs;
  for (const char* k : kinds) {
    CLI::App* sub = app.add_subcommand(k);
    sub->add_option("--config", config_path, "JSON config path");
    sub->add_option("--R", R_override, "override scale list");
    sub->add_option("--p", p_override, "override exponent list");
    sub->add_option("--seed", seed_override, "override seed list");
    sub->add_option("--out", out_dir, "output directory");
    subs.push_back(sub);
  }

  CLI::App* regress = app.add_subcommand("regress", "log-log slope of CSV columns");
  std::string csv_path, xcol = "R", ycol = "ratio", regress_out;
  regress->add_option("csv", csv_path, "input CSV path")->required();
  regress->add_option("--x", xcol, "abscissa column");
  regress->add_option("--y", ycol, "ordinate column");
  regress->add_option("--out", regress_out, "JSON output path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (regress->parsed()) return run_regress(csv_path, xcol, ycol, regress_out);
    ExperimentConfig cfg;
    if (!config_path.empty()) cfg = config_from_json(json::parse(read_file(config_path)));
    for (std::size_t i = 0; i < subs.size(); ++i)
      if (subs[i]->parsed()) cfg.kind = kinds[i];
    if (!R_override.empty()) cfg.R_list = R_override;
    if (!p_override.empty()) cfg.p_list = p_override;
    if (!seed_override.empty()) cfg.seeds = seed_override;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    return run_experiment(cfg);
  } catch (const json::exception& ex) {
    std::cerr << "config error: " << ex.what() << "\n";
    return 1;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
}
