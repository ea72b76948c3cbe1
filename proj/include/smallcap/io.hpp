#pragma once
// Serialization and report emission: JSON round-trips for the core objects
// (cap collections, atomic signals, tube families, packet decompositions,
// experiment configs), CSV tables with a fixed column order and header row,
// and a content hash for replay verification.
//
// All floating-point output goes through one shortest-round-trip formatter,
// so identical doubles always produce identical bytes -- the determinism
// contract ("same config => byte-identical CSV") reduces to the numerical
// determinism of the computation itself.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "smallcap/decoupling.hpp"
#include "smallcap/geometry.hpp"
#include "smallcap/highlow.hpp"
#include "smallcap/regression.hpp"
#include "smallcap/signal.hpp"
#include "smallcap/wave_packets.hpp"

namespace smallcap {

using json = nlohmann::json;

// Shortest decimal string that round-trips the double exactly.
inline std::string format_double(double v) {
  char buf[64];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    double back = 0;
    std::sscanf(buf, "%lf", &back);
    if (back == v) return buf;
  }
  return buf;
}

// FNV-1a 64 over the bytes, rendered as 16 hex digits.
inline std::string content_hash(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// --- JSON round-trips ------------------------------------------------------

inline json caps_to_json(const CapCollection& cc) {
  json j;
  j["n"] = cc.alpha.n;
  j["R"] = cc.scale.R;
  j["alpha"] = cc.alpha.entries;
  j["kind"] = cc.kind == CapKind::canonical ? "canonical" : "small";
  json corners = json::array();
  for (const Cap& c : cc.caps) corners.push_back(c.corner);
  j["corners"] = corners;
  return j;
}

inline CapCollection caps_from_json(const json& j) {
  AlphaVector a = AlphaVector::of(j.at("alpha").get<std::vector<double>>());
  Scale R = Scale::of(j.at("R").get<std::uint64_t>());
  CapKind kind = j.at("kind").get<std::string>() == "canonical" ? CapKind::canonical
                                                                : CapKind::small;
  AlphaVector eff = kind == CapKind::canonical ? AlphaVector::canonical(a.n) : a;
  CapGrid grid = CapGrid::of(eff, R);
  CapCollection cc;
  cc.alpha = eff;
  cc.scale = R;
  cc.kind = kind;
  cc.grid_rounded = grid.rounded;
  cc.domain_factor = std::pow(2.0, a.n - 1);
  for (const auto& corner : j.at("corners")) {
    Cap c;
    c.alpha = eff;
    c.scale = R;
    c.kind = kind;
    c.m = grid.m;
    c.corner = corner.get<std::vector<std::int64_t>>();
    cc.caps.push_back(std::move(c));
  }
  return cc;
}

inline json signal_to_json(const AtomicSignal& F) {
  json j;
  j["n"] = F.n();
  j["R"] = F.scale.R;
  j["alpha"] = F.alpha.entries;
  if (F.lattice_period)
    j["lattice_period"] = *F.lattice_period;
  else
    j["lattice_period"] = nullptr;
  json atoms = json::array();
  for (const auto& a : F.atoms) {
    json atom;
    atom["xi"] = a.xi;
    atom["re"] = a.amp.real();
    atom["im"] = a.amp.imag();
    atoms.push_back(std::move(atom));
  }
  j["atoms"] = atoms;
  return j;
}

inline AtomicSignal signal_from_json(const json& j) {
  AtomicSignal F;
  F.alpha = AlphaVector::of(j.at("alpha").get<std::vector<double>>());
  F.scale = Scale::of(j.at("R").get<std::uint64_t>());
  if (!j.at("lattice_period").is_null())
    F.lattice_period = j.at("lattice_period").get<double>();
  for (const auto& atom : j.at("atoms")) {
    FrequencyAtom a;
    a.xi = atom.at("xi").get<Vec>();
    a.amp = cplx(atom.at("re").get<double>(), atom.at("im").get<double>());
    if (static_cast<int>(a.xi.size()) != F.n())
      throw std::invalid_argument("signal_from_json: atom dimension mismatch");
    F.atoms.push_back(std::move(a));
  }
  return F;
}

inline json family_to_json(const SyntheticTubeFamily& fam) {
  json j;
  j["n"] = fam.n;
  j["R"] = fam.R.R;
  j["alpha"] = fam.alpha.entries;
  j["placement"] = fam.placement;
  j["seed"] = fam.seed;
  j["window_lo"] = fam.window_lo;
  j["window_side"] = fam.window_side;
  j["N_i"] = fam.N_i;
  json tubes = json::array();
  for (const Tube& t : fam.tubes) {
    json tj;
    tj["theta"] = t.theta_corner;
    tj["translate"] = t.translate;
    tj["re"] = t.weight.real();
    tj["im"] = t.weight.imag();
    tj["direction"] = t.direction;
    tj["center"] = t.center;
    tubes.push_back(std::move(tj));
  }
  j["tubes"] = tubes;
  return j;
}

inline SyntheticTubeFamily family_from_json(const json& j) {
  SyntheticTubeFamily fam;
  fam.n = j.at("n").get<int>();
  fam.R = Scale::of(j.at("R").get<std::uint64_t>());
  fam.alpha = AlphaVector::of(j.at("alpha").get<std::vector<double>>());
  fam.placement = j.at("placement").get<std::string>();
  fam.seed = j.at("seed").get<std::uint64_t>();
  fam.window_lo = j.at("window_lo").get<Vec>();
  fam.window_side = j.at("window_side").get<double>();
  fam.N_i = j.at("N_i").get<int>();
  for (const auto& tj : j.at("tubes")) {
    Tube t;
    t.theta_corner = tj.at("theta").get<std::vector<std::int64_t>>();
    t.translate = tj.at("translate").get<std::vector<std::int64_t>>();
    t.weight = cplx(tj.at("re").get<double>(), tj.at("im").get<double>());
    t.direction = tj.at("direction").get<Vec>();
    t.center = tj.at("center").get<Vec>();
    fam.tubes.push_back(std::move(t));
  }
  return fam;
}

// Packet decomposition as a flat tube list: (theta index, translate, weight).
inline json tubes_to_json(const std::vector<Tube>& tubes) {
  json arr = json::array();
  for (const Tube& t : tubes) {
    json tj;
    tj["theta"] = t.theta_corner;
    tj["translate"] = t.translate;
    tj["re"] = t.weight.real();
    tj["im"] = t.weight.imag();
    arr.push_back(std::move(tj));
  }
  return arr;
}

inline json fit_to_json(const FitResult& fit) {
  json j;
  j["slope"] = fit.slope;
  j["intercept"] = fit.intercept;
  j["max_residual"] = fit.max_residual;
  return j;
}

// --- CSV -------------------------------------------------------------------

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> row) {
    if (row.size() != header.size())
      throw std::invalid_argument("CsvTable: row width mismatch");
    rows.push_back(std::move(row));
  }
  std::string to_string() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < header.size(); ++i)
      os << (i ? "," : "") << header[i];
    os << "\n";
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
      os << "\n";
    }
    return os.str();
  }
};

// alpha entries joined with ';' so the cell stays comma-free.
inline std::string alpha_label(const AlphaVector& a) {
  std::string s;
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    if (i) s += ';';
    s += format_double(a.entries[i]);
  }
  return s;
}

inline CsvTable decoupling_csv(const std::vector<DecouplingReport>& reports) {
  CsvTable t;
  t.header = {"alpha", "R",     "p",    "family",             "lhs", "rhs_core",
              "ratio", "predicted_exponent", "region", "mode", "seed"};
  for (const auto& r : reports)
    t.add_row({alpha_label(r.alpha), std::to_string(r.R.R), format_double(r.p),
               r.family, format_double(r.lhs), format_double(r.rhs_core),
               format_double(r.ratio), format_double(r.predicted_exponent), r.region,
               r.mode, std::to_string(r.seed)});
  return t;
}

inline CsvTable quadrature_csv() {
  CsvTable t;
  t.header = {"R", "p", "mode", "samples", "value", "flags"};
  return t;
}

inline CsvTable audit_csv() {
  CsvTable t;
  t.header = {"family_hash", "parameters", "quantity", "measured", "bound", "ratio"};
  return t;
}

// --- minimal CSV reading (for the regress subcommand) ----------------------

inline std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> out;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> row;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) row.push_back(cell);
    if (!line.empty() && line.back() == ',') row.push_back("");
    out.push_back(std::move(row));
  }
  return out;
}

inline std::vector<double> csv_column(const std::vector<std::vector<std::string>>& table,
                                      const std::string& name) {
  if (table.empty()) throw std::invalid_argument("csv_column: empty table");
  std::size_t col = table[0].size();
  for (std::size_t i = 0; i < table[0].size(); ++i)
    if (table[0][i] == name) col = i;
  if (col == table[0].size())
    throw std::invalid_argument("csv_column: no column named '" + name + "'");
  std::vector<double> out;
  for (std::size_t r = 1; r < table.size(); ++r) {
    if (col >= table[r].size())
      throw std::invalid_argument("csv_column: ragged row " + std::to_string(r));
    std::size_t pos = 0;
    double v = std::stod(table[r][col], &pos);
    if (pos != table[r][col].size())
      throw std::invalid_argument("csv_column: non-numeric cell in row " +
                                  std::to_string(r));
    out.push_back(v);
  }
  return out;
}

// --- experiment configs ----------------------------------------------------

struct ExperimentConfig {
  int schema = 1;
  std::string kind;  // caps|synth|norm|decouple|multilinear|packets|incidence|
                     // regress|audit-exponents
  int n = 2;
  std::vector<double> alpha = {1.0};
  std::vector<std::uint64_t> R_list = {64};
  std::vector<double> p_list = {4.0};
  std::string family = "constant";
  std::vector<std::uint64_t> seeds = {0};
  std::string quad = "auto";  // auto | lattice | mc | grid
  std::uint64_t samples = 30000;
  std::string placement = "uniform";  // incidence families
  double thetas_frac = 0.5;
  int tubes_per_theta = 2;
  std::string out_dir = ".";

  void validate() const {
    static const char* kinds[] = {"caps",        "synth",     "norm",
                                  "decouple",    "multilinear", "packets",
                                  "incidence",   "regress",   "audit-exponents"};
    bool known = false;
    for (const char* k : kinds) known = known || kind == k;
    if (!known) throw std::invalid_argument("config: unknown kind '" + kind + "'");
    if (schema != 1) throw std::invalid_argument("config: unsupported schema version");
    if (n < 2) throw std::invalid_argument("config: n >= 2 required");
    if (static_cast<int>(alpha.size()) != n - 1)
      throw std::invalid_argument("config: alpha must have n-1 entries");
    AlphaVector::of(alpha);  // range check
    if (R_list.empty()) throw std::invalid_argument("config: empty R list");
    for (std::uint64_t R : R_list) Scale::of(R);  // power-of-two check
    if (p_list.empty()) throw std::invalid_argument("config: empty p list");
    for (double p : p_list)
      if (p < 1.0) throw std::invalid_argument("config: p >= 1 required");
    if (family != "constant" && family != "random")
      throw std::invalid_argument("config: family must be constant or random");
    if (seeds.empty()) throw std::invalid_argument("config: empty seed list");
    if (quad != "auto" && quad != "lattice" && quad != "mc" && quad != "grid")
      throw std::invalid_argument("config: quad must be auto|lattice|mc|grid");
    if (samples < 100) throw std::invalid_argument("config: samples >= 100");
    if (kind == "incidence") {
      if (placement != "uniform" && placement != "clustered" && placement != "bush" &&
          placement != "brush")
        throw std::invalid_argument("config: unknown placement '" + placement + "'");
      if (tubes_per_theta < 1)
        throw std::invalid_argument("config: tubes_per_theta >= 1");
      if (thetas_frac <= 0.0 || thetas_frac > 1.0)
        throw std::invalid_argument("config: thetas_frac in (0, 1]");
    }
  }
};

inline json config_to_json(const ExperimentConfig& c) {
  json j;
  j["schema"] = c.schema;
  j["kind"] = c.kind;
  j["n"] = c.n;
  j["alpha"] = c.alpha;
  j["R"] = c.R_list;
  j["p"] = c.p_list;
  j["family"] = c.family;
  j["seeds"] = c.seeds;
  j["quad"] = c.quad;
  j["samples"] = c.samples;
  j["placement"] = c.placement;
  j["thetas_frac"] = c.thetas_frac;
  j["tubes_per_theta"] = c.tubes_per_theta;
  j["out_dir"] = c.out_dir;
  return j;
}

inline ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  c.schema = j.value("schema", 1);
  c.kind = j.at("kind").get<std::string>();
  c.n = j.value("n", 2);
  c.alpha = j.value("alpha", std::vector<double>{1.0});
  c.R_list = j.value("R", std::vector<std::uint64_t>{64});
  c.p_list = j.value("p", std::vector<double>{4.0});
  c.family = j.value("family", std::string("constant"));
  c.seeds = j.value("seeds", std::vector<std::uint64_t>{0});
  c.quad = j.value("quad", std::string("auto"));
  c.samples = j.value("samples", std::uint64_t{30000});
  c.placement = j.value("placement", std::string("uniform"));
  c.thetas_frac = j.value("thetas_frac", 0.5);
  c.tubes_per_theta = j.value("tubes_per_theta", 2);
  c.out_dir = j.value("out_dir", std::string("."));
  c.validate();
  return c;
}

// --- files -----------------------------------------------------------------

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << bytes;
}

}  // namespace smallcap
