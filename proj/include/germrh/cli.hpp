#pragma once

// Batch front end: YAML cover specifications, command reports as JSON plus a
// plain-text table, exit codes.  Needs yaml-cpp and nlohmann_json.

#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <yaml-cpp/yaml.h>

#include "germrh/genus.hpp"
#include "germrh/grid.hpp"
#include "germrh/oracle.hpp"
#include "germrh/propagation.hpp"
#include "germrh/torsor.hpp"

namespace germrh::cli {

using json = nlohmann::json;

enum Exit { kOk = 0, kInput = 1, kMismatch = 2, kUnstable = 3 };

inline int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::PrecisionExhausted:
    case ErrorKind::WindowExhausted:
    case ErrorKind::Unstable: return kUnstable;
    case ErrorKind::Internal: return kMismatch;
    default: return kInput;
  }
}

// ---------------------------------------------------------------------------
// spec file
// ---------------------------------------------------------------------------

struct RingSpec {
  int p = 3, r = 3, s = 1, M = 8;
  int precision = 0, window = 0;  // 0: defaults
};

/// Exactly one of `equation` (concrete) or `tag`/`m` (abstract) is meaningful.
struct CoverSpec {
  std::string name;
  int line = 0;
  bool concrete = false;
  std::optional<TorsorEquation> equation;
  GroupTag tag;
  int m = 0;
};

struct GenusSpec {
  int line = 0;
  int g_x = 0;
  std::optional<std::pair<int, int>> delta_r;  // (delta_x, r_x) when given instead of g_x
  RamificationData ram;
  std::vector<BoundaryBranchData> boundaries;
};

struct SpecFile {
  RingSpec ring_spec;
  Ring ring;
  std::vector<CoverSpec> covers;
  std::optional<std::pair<int, int>> pair;
  std::optional<TowerPlan> tower;
  std::optional<GenusSpec> genus;
};

namespace detail {

inline int line_of(const YAML::Node& n) { return n.Mark().line + 1; }

[[noreturn]] inline void schema_error(const YAML::Node& n, const std::string& what) {
  fail(ErrorKind::InvalidInput, "line " + std::to_string(line_of(n)) + ": " + what);
}

inline void allow_keys(const YAML::Node& n, std::initializer_list<const char*> keys, const std::string& where) {
  if (!n.IsMap()) schema_error(n, where + " must be a mapping");
  for (auto it = n.begin(); it != n.end(); ++it) {
    const std::string k = it->first.as<std::string>();
    bool ok = false;
    for (const char* a : keys) ok = ok || k == a;
    if (!ok) schema_error(it->first, "unknown key '" + k + "' in " + where);
  }
}

inline int as_int(const YAML::Node& n, const std::string& what) {
  if (!n.IsScalar()) schema_error(n, what + " must be an integer");
  try {
    const std::string s = n.as<std::string>();
    std::size_t used = 0;
    long long v = std::stoll(s, &used);
    if (used != s.size() || v < INT_MIN || v > INT_MAX) schema_error(n, what + " must be an integer, got '" + s + "'");
    return static_cast<int>(v);
  } catch (const std::logic_error&) {
    schema_error(n, what + " must be an integer, got '" + n.as<std::string>() + "'");
  }
}

inline int get_int(const YAML::Node& parent, const char* key, std::optional<int> dflt, const std::string& where) {
  const YAML::Node n = parent[key];
  if (!n) {
    if (!dflt) schema_error(parent, where + " needs '" + key + "'");
    return *dflt;
  }
  return as_int(n, where + "." + key);
}

inline RElem parse_coefficient(const Ring& R, const YAML::Node& n, int exponent) {
  const std::string what = "coefficient of T^" + std::to_string(exponent);
  if (n.IsScalar()) return RElem::from_int(R, as_int(n, what));
  if (!n.IsSequence()) schema_error(n, what + " must be an integer or a list of pi-adic digits");
  std::vector<int> digits;
  for (const auto& d : n) {
    const int v = as_int(d, what + " digit");
    if (v < 0 || v >= R->k.size())
      schema_error(d, what + ": digit " + std::to_string(v) + " outside [0, " + std::to_string(R->k.size()) + ")");
    digits.push_back(v);
  }
  if (digits.empty()) schema_error(n, what + ": empty digit list");
  if (static_cast<int>(digits.size()) > R->max_prec)
    schema_error(n, what + ": more digits than the ring's precision " + std::to_string(R->max_prec));
  return RElem::from_digits(R, digits);
}

inline GroupTag parse_tag(const YAML::Node& n, std::optional<int> level) {
  const std::string t = n.as<std::string>();
  if (t == "mu_p" || t == "mu") return GroupTag::mu();
  if (t == "etale") return GroupTag::etale();
  if (t == "hn") {
    if (!level) schema_error(n, "tag hn needs a level 'n'");
    return GroupTag::hn(*level);
  }
  schema_error(n, "tag must be one of mu_p, etale, hn; got '" + t + "'");
}

inline int max_abs_key(const YAML::Node& u) {
  int w = 0;
  for (auto it = u.begin(); it != u.end(); ++it) w = std::max(w, std::abs(as_int(it->first, "exponent")));
  return w;
}

inline CoverSpec parse_cover(const SpecFile& f, const YAML::Node& n, std::size_t index) {
  allow_keys(n, {"name", "kind", "n", "u", "tag", "m"}, "cover");
  CoverSpec c;
  c.line = line_of(n);
  c.name = n["name"] ? n["name"].as<std::string>() : "cover" + std::to_string(index);
  const bool has_kind = static_cast<bool>(n["kind"]), has_tag = static_cast<bool>(n["tag"]);
  if (has_kind == has_tag) schema_error(n, "cover '" + c.name + "' needs exactly one of 'kind' (concrete) or 'tag' (abstract)");
  std::optional<int> level;
  if (n["n"]) level = as_int(n["n"], "n");
  const Ring& R = f.ring;
  if (has_tag) {
    if (n["u"]) schema_error(n["u"], "abstract cover '" + c.name + "' cannot carry 'u'");
    c.tag = parse_tag(n["tag"], level);
    c.m = get_int(n, "m", std::nullopt, "cover '" + c.name + "'");
    try {
      abstract_torsor(c.tag, c.m, R->p, R->r);
    } catch (const Error& e) {
      schema_error(n, e.detail());
    }
    return c;
  }
  if (n["m"]) schema_error(n["m"], "concrete cover '" + c.name + "' cannot carry 'm'; it is computed");
  const YAML::Node u = n["u"];
  if (!u || !u.IsMap()) schema_error(n, "concrete cover '" + c.name + "' needs 'u' as a mapping exponent: coefficient");
  std::map<int, RElem> terms;
  for (auto it = u.begin(); it != u.end(); ++it) {
    const int k = as_int(it->first, "exponent");
    RElem a = parse_coefficient(R, it->second, k);
    auto [pos, fresh] = terms.emplace(k, a);
    if (!fresh) schema_error(it->first, "exponent " + std::to_string(k) + " given twice");
  }
  const int W = f.ring_spec.window > 0 ? f.ring_spec.window : std::max(30, 4 * max_abs_key(u) + 8);
  RLaurent series = RLaurent::from_terms(R, terms, R->max_prec, W);
  const std::string kind = n["kind"].as<std::string>();
  c.concrete = true;
  if (kind == "kummer") {
    c.equation = TorsorEquation::kummer(series);
  } else if (kind == "etale") {
    c.equation = TorsorEquation::etale(series);
  } else if (kind == "hn") {
    if (!level) schema_error(n, "kind hn needs a level 'n'");
    c.equation = TorsorEquation::hn(*level, series);
  } else {
    schema_error(n["kind"], "kind must be one of kummer, etale, hn; got '" + kind + "'");
  }
  try {
    check_equation(*c.equation);
  } catch (const Error& e) {
    schema_error(n, e.detail());
  }
  return c;
}

inline BoundaryBranchData parse_boundary(const YAML::Node& n) {
  allow_keys(n, {"pattern", "c1", "c1p"}, "boundary");
  BoundaryBranchData b;
  if (!n["pattern"]) schema_error(n, "boundary needs 'pattern'");
  try {
    b.pattern = parse_pattern(n["pattern"].as<std::string>());
  } catch (const Error& e) {
    schema_error(n["pattern"], e.detail());
  }
  b.c1 = get_int(n, "c1", 1, "boundary");
  b.c1p = get_int(n, "c1p", 1, "boundary");
  if (b.c1 < 1 || b.c1p < 1) schema_error(n, "boundary conductors must be >= 1");
  return b;
}

inline GenusSpec parse_genus(const YAML::Node& n) {
  allow_keys(n, {"g_x", "delta_x", "r_x", "r1", "r2", "boundaries"}, "genus");
  GenusSpec g;
  g.line = line_of(n);
  const bool gx = static_cast<bool>(n["g_x"]), dr = n["delta_x"] || n["r_x"];
  if (gx == dr) schema_error(n, "genus needs either 'g_x' or both 'delta_x' and 'r_x'");
  if (gx) {
    g.g_x = as_int(n["g_x"], "g_x");
    if (g.g_x < 0) schema_error(n["g_x"], "g_x must be >= 0");
  } else {
    g.delta_r = std::pair{get_int(n, "delta_x", std::nullopt, "genus"), get_int(n, "r_x", std::nullopt, "genus")};
    try {
      g.g_x = genus_point(g.delta_r->first, g.delta_r->second);
    } catch (const Error& e) {
      schema_error(n, e.detail());
    }
  }
  g.ram.r1 = get_int(n, "r1", 0, "genus");
  g.ram.r2 = get_int(n, "r2", 0, "genus");
  if (g.ram.r1 < 0 || g.ram.r2 < 0) schema_error(n, "r1, r2 must be >= 0");
  const YAML::Node bs = n["boundaries"];
  if (!bs || !bs.IsSequence() || bs.size() == 0) schema_error(n, "genus needs a non-empty 'boundaries' list");
  for (const auto& b : bs) g.boundaries.push_back(parse_boundary(b));
  return g;
}

inline int default_r(int p) { return p; }

}  // namespace detail

inline SpecFile parse_spec(const YAML::Node& root) {
  using namespace detail;
  SpecFile f;
  if (!root || !root.IsMap()) fail(ErrorKind::InvalidInput, "spec file must be a YAML mapping");
  allow_keys(root, {"ring", "covers", "pair", "tower", "genus"}, "spec");
  const YAML::Node ring = root["ring"];
  if (!ring) schema_error(root, "spec needs a 'ring' block");
  allow_keys(ring, {"p", "r", "s", "M", "precision", "window"}, "ring");
  RingSpec& rs = f.ring_spec;
  rs.p = get_int(ring, "p", std::nullopt, "ring");
  if (rs.p < 2 || !is_prime(rs.p)) schema_error(ring["p"], "p must be prime");
  rs.r = get_int(ring, "r", default_r(rs.p), "ring");
  rs.s = get_int(ring, "s", 1, "ring");
  rs.M = get_int(ring, "M", default_M(rs.p), "ring");
  rs.precision = get_int(ring, "precision", 0, "ring");
  rs.window = get_int(ring, "window", 0, "ring");
  if (rs.precision < 0 || rs.window < 0) schema_error(ring, "precision and window must be >= 0");
  try {
    f.ring = make_ring(rs.p, rs.r, rs.s, rs.M);
  } catch (const Error& e) {
    schema_error(ring, e.detail());
  }
  if (const YAML::Node cs = root["covers"]) {
    if (!cs.IsSequence()) schema_error(cs, "'covers' must be a list");
    for (std::size_t i = 0; i < cs.size(); ++i) f.covers.push_back(parse_cover(f, cs[i], i));
  }
  auto index = [&](const YAML::Node& n) {
    const int i = as_int(n, "cover index");
    if (i < 0 || i >= static_cast<int>(f.covers.size()))
      schema_error(n, "cover index " + std::to_string(i) + " out of range (" + std::to_string(f.covers.size()) + " covers)");
    return i;
  };
  if (const YAML::Node pr = root["pair"]) {
    if (!pr.IsSequence() || pr.size() != 2) schema_error(pr, "'pair' must be a list of two cover indices");
    f.pair = std::pair{index(pr[0]), index(pr[1])};
    if (f.pair->first == f.pair->second) schema_error(pr, "'pair' needs two different covers");
  }
  if (const YAML::Node t = root["tower"]) {
    allow_keys(t, {"plan"}, "tower");
    if (f.covers.size() != 3) schema_error(t, "a tower needs exactly three covers");
    TowerPlan plan;
    if (const YAML::Node pl = t["plan"]) {
      if (!pl.IsSequence() || pl.size() != 3) schema_error(pl, "'plan' must list three cover indices: left, pivot, right");
      plan = {index(pl[0]), index(pl[1]), index(pl[2])};
      if (plan.left == plan.pivot || plan.pivot == plan.right || plan.left == plan.right)
        schema_error(pl, "tower plan indices must be distinct");
    }
    f.tower = plan;
  }
  if (const YAML::Node g = root["genus"]) f.genus = parse_genus(g);
  return f;
}

inline SpecFile parse_spec_text(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    fail(ErrorKind::InvalidInput, "line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  return parse_spec(root);
}

inline SpecFile parse_spec_file(const std::string& path) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path);
  } catch (const YAML::BadFile&) {
    fail(ErrorKind::InvalidInput, "cannot read spec file '" + path + "'");
  } catch (const YAML::Exception& e) {
    fail(ErrorKind::InvalidInput, path + ": line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  return parse_spec(root);
}

// ---------------------------------------------------------------------------
// JSON forms of the results; from_json inverts to_json
// ---------------------------------------------------------------------------

inline json tag_json(const GroupTag& t) { return t.to_string(); }

inline GroupTag tag_from_json(const json& j) {
  const std::string s = j.get<std::string>();
  if (s == "mu_p") return GroupTag::mu();
  if (s == "etale") return GroupTag::etale();
  if (s.rfind("H_", 0) == 0) return GroupTag::hn(std::stoi(s.substr(2)));
  fail(ErrorKind::InvalidInput, "unknown group tag '" + s + "'");
}

inline json invariants_json(const TorsorData& td) {
  return {{"tag", tag_json(td.tag)}, {"m", td.m}, {"c", td.c}, {"delta", td.delta}};
}

inline TorsorData invariants_from_json(const json& j) {
  TorsorData td;
  td.tag = tag_from_json(j.at("tag"));
  td.m = j.at("m").get<int>();
  td.c = j.at("c").get<int>();
  td.delta = j.at("delta").get<int>();
  return td;
}

inline json pp_json(const PPResult& r) {
  json j = {{"m1p", r.m1p}, {"m2p", r.m2p}, {"c1p", r.c1p}, {"c2p", r.c2p}, {"ds", r.ds}, {"form", std::string(1, r.form)}};
  if (r.has_differents) {
    j["delta1p"] = r.d1p;
    j["delta2p"] = r.d2p;
    j["g1p"] = tag_json(r.g1p);
    j["g2p"] = tag_json(r.g2p);
    j["delta_total"] = r.delta_total;
  } else {
    j["differents_error"] = r.differents_error;
  }
  return j;
}

inline PPResult pp_from_json(const json& j) {
  PPResult r;
  r.m1p = j.at("m1p").get<int>();
  r.m2p = j.at("m2p").get<int>();
  r.c1p = j.at("c1p").get<int>();
  r.c2p = j.at("c2p").get<int>();
  r.ds = j.at("ds").get<int>();
  r.form = j.at("form").get<std::string>().at(0);
  r.has_differents = j.contains("delta1p");
  if (r.has_differents) {
    r.d1p = j.at("delta1p").get<int>();
    r.d2p = j.at("delta2p").get<int>();
    r.g1p = tag_from_json(j.at("g1p"));
    r.g2p = tag_from_json(j.at("g2p"));
    r.delta_total = j.at("delta_total").get<int>();
  } else {
    r.differents_error = j.at("differents_error").get<std::string>();
  }
  return r;
}

inline json oracle_json(const OracleResult& o, bool trace) {
  json j = {{"m1p", o.m1p}, {"upper_tag", tag_json(o.upper_tag)}, {"n_prime", o.n_prime},
            {"precision", o.precision}, {"window", o.window}, {"stable", o.stable}};
  if (trace) {
    json t = json::array();
    for (const auto& s : o.log) t.push_back({{"step", s.step}, {"detail", s.detail}});
    j["trace"] = t;
  }
  return j;
}

// ---------------------------------------------------------------------------
// commands
// ---------------------------------------------------------------------------

struct Options {
  bool oracle = false;
  bool trace = false;
  int precision = 0;
  int window = 0;
};

struct Report {
  json data;
  std::string text;
  int exit = kOk;
};

namespace detail {

inline OracleOptions oracle_options(const SpecFile& f, const Options& o) {
  OracleOptions opt;
  opt.precision = o.precision > 0 ? o.precision : f.ring_spec.precision;
  opt.window = o.window > 0 ? o.window : f.ring_spec.window;
  opt.trace = o.trace;
  return opt;
}

inline json ring_json(const SpecFile& f) {
  const Ring& R = f.ring;
  return {{"p", R->p}, {"r", R->r}, {"s", R->s}, {"M", R->M}, {"e", R->e}, {"v_lambda", R->v_lambda}};
}

/// Invariants of a cover, classified when concrete.
inline TorsorData cover_data(const SpecFile& f, const CoverSpec& c) {
  const Ring& R = f.ring;
  if (!c.concrete) return abstract_torsor(c.tag, c.m, R->p, R->r);
  try {
    return classify(*c.equation);
  } catch (const Error& e) {
    fail(e.kind(), "cover '" + c.name + "' (line " + std::to_string(c.line) + "): " + e.detail());
  }
}

inline std::pair<int, int> chosen_pair(const SpecFile& f) {
  if (f.pair) return *f.pair;
  require(f.covers.size() >= 2, ErrorKind::InvalidInput, "need at least two covers (or a 'pair')");
  return {0, 1};
}

inline std::string pad(const std::string& s, std::size_t w) { return s.size() >= w ? s + " " : s + std::string(w - s.size(), ' '); }

}  // namespace detail

inline Report cmd_classify(const SpecFile& f, const Options& = {}) {
  Report rep;
  require(!f.covers.empty(), ErrorKind::InvalidInput, "no covers to classify");
  rep.data["ring"] = detail::ring_json(f);
  rep.data["covers"] = json::array();
  std::ostringstream t;
  t << detail::pad("name", 12) << detail::pad("source", 10) << detail::pad("tag", 8) << detail::pad("m", 6)
    << detail::pad("c", 6) << "delta\n";
  for (const auto& c : f.covers) {
    TorsorData td = detail::cover_data(f, c);
    json j = invariants_json(td);
    j["name"] = c.name;
    j["source"] = c.concrete ? "concrete" : "abstract";
    if (c.concrete && td.normalized) {
      j["normal_form"] = {{"kind", to_string(td.normalized->kind)}, {"u", td.normalized->u.to_json()}};
      if (td.normalized->kind == EqKind::Hn) j["normal_form"]["n"] = td.normalized->n;
    }
    rep.data["covers"].push_back(j);
    t << detail::pad(c.name, 12) << detail::pad(c.concrete ? "concrete" : "abstract", 10)
      << detail::pad(td.tag.to_string(), 8) << detail::pad(std::to_string(td.m), 6) << detail::pad(std::to_string(td.c), 6)
      << td.delta << "\n";
  }
  rep.text = t.str();
  return rep;
}

inline Report cmd_propagate(const SpecFile& f, const Options& o = {}) {
  Report rep;
  const auto [i, j] = detail::chosen_pair(f);
  const CoverSpec &a = f.covers[i], &b = f.covers[j];
  const TorsorData ta = detail::cover_data(f, a), tb = detail::cover_data(f, b);
  const Ring& R = f.ring;
  rep.data["ring"] = detail::ring_json(f);
  rep.data["pair"] = {a.name, b.name};
  rep.data["inputs"] = {invariants_json(ta), invariants_json(tb)};
  std::ostringstream t;
  t << a.name << " (" << ta.tag.to_string() << ", m=" << ta.m << ")  x  " << b.name << " (" << tb.tag.to_string()
    << ", m=" << tb.m << ")\n";
  std::optional<PPResult> closed;
  try {
    closed = propagate({ta, tb, R->p, R->r});
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::OracleRequired) throw;
    if (!o.oracle) fail(ErrorKind::OracleRequired, e.detail() + "; run with --oracle");
    rep.data["closed_form"] = nullptr;
    t << "closed form: none for this pair\n";
  }
  if (closed) {
    rep.data["closed_form"] = pp_json(*closed);
    for (const char* k : {"m1p", "m2p", "c1p", "c2p", "ds"}) rep.data[k] = rep.data["closed_form"][k];
    t << "m'1 = " << closed->m1p << ", m'2 = " << closed->m2p << ", c'1 = " << closed->c1p << ", c'2 = " << closed->c2p
      << ", d_s = " << closed->ds << "\n";
    if (closed->has_differents)
      t << "delta'1 = " << closed->d1p << " (" << closed->g1p.to_string() << "), delta'2 = " << closed->d2p << " ("
        << closed->g2p.to_string() << ")\n";
    else
      t << "upper differents: " << closed->differents_error << "\n";
  }
  if (o.oracle) {
    require(a.concrete && b.concrete, ErrorKind::InvalidInput, "--oracle needs two concrete covers");
    const OracleOptions opt = detail::oracle_options(f, o);
    const OracleResult o1 = oracle_conductor(*a.equation, *b.equation, opt);
    const OracleResult o2 = oracle_conductor(*b.equation, *a.equation, opt);
    rep.data["oracle"] = {oracle_json(o1, o.trace), oracle_json(o2, o.trace)};
    t << "oracle: m'1 = " << o1.m1p << " (" << o1.upper_tag.to_string() << "), m'2 = " << o2.m1p << " ("
      << o2.upper_tag.to_string() << ")\n";
    if (o.trace)
      for (const auto* res : {&o1, &o2})
        for (const auto& s : res->log) t << "  [" << s.step << "] " << s.detail << "\n";
    if (closed) {
      const bool match = closed->m1p == o1.m1p && closed->m2p == o2.m1p;
      rep.data["match"] = match;
      t << (match ? "closed form and oracle agree\n" : "MISMATCH between closed form and oracle\n");
      if (!match) rep.exit = kMismatch;
    } else {
      for (const char* k : {"m1p", "m2p"}) rep.data[k] = k[1] == '1' ? o1.m1p : o2.m1p;
    }
  }
  rep.text = t.str();
  return rep;
}

inline Report cmd_tower(const SpecFile& f, const Options& = {}) {
  Report rep;
  require(f.covers.size() == 3, ErrorKind::InvalidInput, "tower needs exactly three covers");
  const TowerPlan plan = f.tower.value_or(TowerPlan{});
  std::vector<TorsorData> levels;
  for (const auto& c : f.covers) levels.push_back(detail::cover_data(f, c));
  const Ring& R = f.ring;
  const TowerResult tr = tower_propagate(levels, R->p, R->r, plan);
  rep.data["ring"] = detail::ring_json(f);
  rep.data["plan"] = {f.covers[plan.left].name, f.covers[plan.pivot].name, f.covers[plan.right].name};
  rep.data["edges"] = {{"c1p", tr.c1p}, {"c2p", tr.c2p}, {"c3p", tr.c3p}, {"c4p", tr.c4p}, {"c1pp", tr.c1pp}, {"c2pp", tr.c2pp}};
  rep.data["left_pair"] = pp_json(tr.left_pair);
  rep.data["right_pair"] = pp_json(tr.right_pair);
  rep.data["top"] = pp_json(tr.top);
  std::ostringstream t;
  t << "middle level: c'1 = " << tr.c1p << ", c'2 = " << tr.c2p << ", c'3 = " << tr.c3p << ", c'4 = " << tr.c4p << "\n";
  t << "top level:    c''1 = " << tr.c1pp << ", c''2 = " << tr.c2pp << "\n";
  bool all_etale = true;
  for (const auto& l : levels) all_etale = all_etale && l.tag.is_etale();
  const int c1 = levels[plan.left].c, c2 = levels[plan.pivot].c, c3 = levels[plan.right].c;
  if (all_etale && c1 <= c2 && c2 <= c3 && tr.c2p <= tr.c3p) {
    const int cf = tower_closed_form_c1pp(c1, c2, c3, R->p);
    rep.data["closed_form_c1pp"] = cf;
    rep.data["closed_form_match"] = cf == tr.c1pp;
    t << "closed form c''1 = " << cf << (cf == tr.c1pp ? " (agrees)\n" : " (MISMATCH)\n");
    if (cf != tr.c1pp) rep.exit = kMismatch;
  }
  rep.text = t.str();
  return rep;
}

inline Report cmd_genus(const SpecFile& f, const Options& = {}) {
  Report rep;
  require(f.genus.has_value(), ErrorKind::InvalidInput, "spec has no 'genus' block");
  const GenusSpec& g = *f.genus;
  const int p = f.ring->p;
  const long long chi_x = 2LL * g.g_x - 2;
  const int gy = rh_type_pp(g.g_x, g.ram, g.boundaries, p);
  const int gy2 = germrh::detail::genus_from_euler(rh_two_step_euler(chi_x, g.ram, g.boundaries, p), "two-step genus");
  require(gy == gy2, ErrorKind::Internal,
          "type-(p,p) genus " + std::to_string(gy) + " differs from the two-step composition " + std::to_string(gy2));
  rep.data["g_x"] = g.g_x;
  rep.data["d_eta"] = d_eta_pp(g.ram, p);
  rep.data["d_s"] = d_s_pp(g.boundaries, p);
  rep.data["g_y"] = gy;
  std::ostringstream t;
  t << "g_x = " << g.g_x << ", d_eta = " << d_eta_pp(g.ram, p) << ", d_s = " << d_s_pp(g.boundaries, p) << "\n";
  t << "g_y = " << gy << "\n";
  // closed forms and the smoothness criterion need a smooth disc with one boundary
  if (g.g_x == 0 && g.boundaries.size() == 1) {
    const auto& b = g.boundaries[0];
    const int which = static_cast<int>(b.pattern) + 1;
    const int disc = smooth_disc_genus(which, g.ram.r1, g.ram.r2, b.c1, b.c1p, p);
    const bool smooth = smoothness_test(g.ram.r1, g.ram.r2, b.c1, b.c1p, p, b.pattern);
    rep.data["smooth_disc_g_y"] = disc;
    rep.data["smooth"] = smooth;
    t << "smooth disc, pattern " << to_string(b.pattern) << ": g_y = " << disc << "; y is "
      << (smooth ? "smooth" : "not smooth") << "\n";
  } else {
    rep.data["smooth"] = nullptr;
  }
  rep.text = t.str();
  return rep;
}

inline Report cmd_torsor_check(const SpecFile& f, const Options& o = {}) {
  Report rep;
  require(f.covers.size() >= 2, ErrorKind::InvalidInput, "torsor-check needs at least two covers");
  std::vector<GroupTag> tags;
  json tj = json::array();
  for (const auto& c : f.covers) {
    tags.push_back(detail::cover_data(f, c).tag);
    tj.push_back(tag_json(tags.back()));
  }
  const bool torsor = is_fiber_product_torsor(tags);
  rep.data["tags"] = tj;
  rep.data["torsor"] = torsor;
  rep.data["reason"] = fiber_product_reason(tags);
  std::ostringstream t;
  t << "fibre product is " << (torsor ? "" : "not ") << "a torsor: " << fiber_product_reason(tags) << "\n";
  if (o.oracle) {
    require(f.covers.size() == 2 && f.covers[0].concrete && f.covers[1].concrete, ErrorKind::InvalidInput,
            "--oracle reducedness needs exactly two concrete covers");
    const bool reduced = boundary_reducedness(*f.covers[0].equation, *f.covers[1].equation, detail::oracle_options(f, o));
    rep.data["reduced"] = reduced;
    t << "special fibre over the boundary is " << (reduced ? "reduced" : "not reduced") << "\n";
    if (reduced != torsor) {
      rep.exit = kMismatch;
      t << "MISMATCH between reducedness and the etale count\n";
    }
  }
  rep.text = t.str();
  return rep;
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

inline std::vector<GridCell> grid_preset(const std::string& name) {
  if (name == "smoke") {
    auto a = smoke_grid(3), b = smoke_grid(5);
    a.insert(a.end(), b.begin(), b.end());
    return a;
  }
  if (name == "p3") return table_grid(3);
  if (name == "p5") return table_grid(5);
  if (name == "full") {
    auto a = table_grid(3), b = table_grid(5);
    a.insert(a.end(), b.begin(), b.end());
    return a;
  }
  fail(ErrorKind::InvalidInput, "unknown grid preset '" + name + "' (smoke, p3, p5, full)");
}

inline json cell_json(const GridCellResult& r) {
  json j = {{"case", r.cell.case_id},
            {"p", r.cell.ring.p},
            {"r", r.cell.ring.r},
            {"s", r.cell.ring.s},
            {"tag1", tag_json(r.cell.t1)},
            {"m1", r.cell.m1},
            {"tag2", tag_json(r.cell.t2)},
            {"m2", r.cell.m2},
            {"match", r.match},
            {"identities", r.identities_ok},
            {"seconds", r.seconds}};
  if (r.formula_ok) j["formula"] = {r.formula.m1p, r.formula.m2p};
  else j["formula_error"] = r.formula_error;
  if (r.oracle_ok) j["oracle"] = {r.o1.m1p, r.o2.m1p};
  else j["oracle_error"] = r.oracle_error;
  if (!r.identities_ok && r.formula_ok) j["identities_error"] = r.identities_error;
  if (r.reduced) {
    j["reduced"] = *r.reduced;
    j["reduced_expected"] = r.reduced_expected;
  } else if (!r.reduced_error.empty()) {
    j["reduced_error"] = r.reduced_error;
  }
  return j;
}

/// Per-cell status: ok, mismatch, or unstable (precision problems are not
/// mismatches).
inline std::string cell_status(const GridCellResult& r) {
  if (!r.oracle_ok) return exit_code(r.oracle_error_kind) == kUnstable ? "unstable" : "error";
  if (!r.formula_ok || !r.identities_ok || !r.match) return "mismatch";
  if (r.reduced && *r.reduced != r.reduced_expected) return "mismatch";
  if (!r.reduced && !r.reduced_error.empty()) return "unstable";
  return "ok";
}

inline Report summarize_grid(const std::vector<GridCellResult>& results, std::optional<FixtureResult> fixture) {
  Report rep;
  rep.data["cells"] = json::array();
  std::ostringstream t;
  t << detail::pad("case", 5) << detail::pad("p", 3) << detail::pad("r", 3) << detail::pad("pair", 28)
    << detail::pad("formula m'", 12) << detail::pad("oracle m'", 12) << "status\n";
  int mism = 0, unstable = 0;
  for (const auto& r : results) {
    json j = cell_json(r);
    const std::string st = cell_status(r);
    j["status"] = st;
    rep.data["cells"].push_back(j);
    mism += st == "mismatch" || st == "error";
    unstable += st == "unstable";
    const std::string pr = "(" + r.cell.t1.to_string() + " " + std::to_string(r.cell.m1) + ", " + r.cell.t2.to_string() +
                           " " + std::to_string(r.cell.m2) + ")";
    const std::string fm = r.formula_ok ? std::to_string(r.formula.m1p) + "," + std::to_string(r.formula.m2p) : "-";
    const std::string om = r.oracle_ok ? std::to_string(r.o1.m1p) + "," + std::to_string(r.o2.m1p) : "-";
    t << detail::pad(std::to_string(r.cell.case_id), 5) << detail::pad(std::to_string(r.cell.ring.p), 3)
      << detail::pad(std::to_string(r.cell.ring.r), 3) << detail::pad(pr, 28) << detail::pad(fm, 12) << detail::pad(om, 12)
      << st;
    if (st != "ok") t << "  " << (r.oracle_ok ? r.formula_error + r.identities_error + r.reduced_error : r.oracle_error);
    t << "\n";
  }
  if (fixture) {
    const bool ok = fixture->o1.m1p == 2 && fixture->o2.m1p == 2 && fixture->o1.upper_tag == GroupTag::hn(2) &&
                    fixture->o2.upper_tag == GroupTag::hn(2);
    rep.data["fixture"] = {{"u1", "T"}, {"u2", "T + T^3"}, {"m1p", fixture->o1.m1p}, {"m2p", fixture->o2.m1p},
                           {"n1p", fixture->o1.n_prime}, {"n2p", fixture->o2.n_prime}, {"ok", ok}};
    t << "fixture u1 = T, u2 = T + T^3 (p = r = 3): m' = " << fixture->o1.m1p << ", " << fixture->o2.m1p
      << "; upper groups " << fixture->o1.upper_tag.to_string() << ", " << fixture->o2.upper_tag.to_string()
      << (ok ? "  ok" : "  MISMATCH") << "\n";
    mism += ok ? 0 : 1;
  }
  rep.data["mismatches"] = mism;
  rep.data["unstable"] = unstable;
  t << results.size() << " cells: " << mism << " mismatch(es), " << unstable << " unstable\n";
  rep.text = t.str();
  rep.exit = mism ? kMismatch : unstable ? kUnstable : kOk;
  return rep;
}

inline Report cmd_verify_grid(const std::string& preset, const Options& o = {}, const FormulaFn& formula = propagate) {
  OracleOptions opt;
  opt.precision = o.precision;
  opt.window = o.window;
  auto results = run_grid(grid_preset(preset), opt, formula);
  std::optional<FixtureResult> fx;
  try {
    fx = mu_mu_fixture(opt);
  } catch (const Error&) {
    fx.reset();
  }
  Report rep = summarize_grid(results, fx);
  rep.data["grid"] = preset;
  if (!fx) {
    rep.data["fixture"] = {{"ok", false}, {"error", "oracle failed on the fixture"}};
    rep.text += "fixture: oracle failed\n";
    rep.exit = std::max<int>(rep.exit, kMismatch);
  }
  return rep;
}

/// Oracle against the closed form for the spec's pair, both roles.
inline Report cmd_verify_spec(const SpecFile& f, const Options& o = {}, const FormulaFn& formula = propagate) {
  Report rep;
  const auto [i, j] = detail::chosen_pair(f);
  const CoverSpec &a = f.covers[i], &b = f.covers[j];
  require(a.concrete && b.concrete, ErrorKind::InvalidInput, "verify needs two concrete covers");
  const TorsorData ta = detail::cover_data(f, a), tb = detail::cover_data(f, b);
  const Ring& R = f.ring;
  const OracleOptions opt = detail::oracle_options(f, o);
  std::ostringstream t;
  rep.data["pair"] = {a.name, b.name};
  std::optional<PPResult> closed;
  try {
    closed = formula({ta, tb, R->p, R->r});
    rep.data["closed_form"] = pp_json(*closed);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::OracleRequired) throw;
    rep.data["closed_form"] = nullptr;
  }
  const OracleResult o1 = oracle_conductor(*a.equation, *b.equation, opt);
  const OracleResult o2 = oracle_conductor(*b.equation, *a.equation, opt);
  rep.data["oracle"] = {oracle_json(o1, o.trace), oracle_json(o2, o.trace)};
  const bool match = !closed || (closed->m1p == o1.m1p && closed->m2p == o2.m1p);
  rep.data["match"] = match;
  t << a.name << " x " << b.name << ": formula m' = "
    << (closed ? std::to_string(closed->m1p) + ", " + std::to_string(closed->m2p) : std::string("(none)"))
    << "; oracle m' = " << o1.m1p << ", " << o2.m1p << "; " << (match ? "match" : "MISMATCH") << "\n";
  rep.exit = match ? kOk : kMismatch;
  rep.text = t.str();
  return rep;
}

}  // namespace germrh::cli
