#include "bdsim/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "bdsim/error.hpp"

namespace bdsim {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& where, const std::string& msg) {
  throw Error(ErrorCode::InvalidArgument, where + ": " + msg);
}

void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!ok.count(it.key())) bad(where + "." + it.key(), "unknown field");
  }
}

const json& require(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) bad(where + "." + key, "missing");
  return j.at(key);
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) bad(where, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) bad(where, "must be finite");
  return v;
}

double nonneg(const json& j, const std::string& where) {
  const double v = number(j, where);
  if (v < 0) bad(where, "must be nonnegative");
  return v;
}

double positive(const json& j, const std::string& where) {
  const double v = number(j, where);
  if (!(v > 0)) bad(where, "must be positive");
  return v;
}

std::uint64_t count(const json& j, const std::string& where) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer() && j.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(j.get<std::int64_t>());
  bad(where, "expected a nonnegative integer");
}

Point point(const json& j, std::size_t d, const std::string& where) {
  if (!j.is_array()) bad(where, "expected an array of coordinates");
  if (j.size() != d) bad(where, "expected " + std::to_string(d) + " coordinates, got " + std::to_string(j.size()));
  Point p(d);
  for (std::size_t k = 0; k < d; ++k) p[k] = number(j[k], where + "[" + std::to_string(k) + "]");
  return p;
}

json point_json(std::span<const double> x) { return json(std::vector<double>(x.begin(), x.end())); }

Box box(const json& j, std::size_t d, const std::string& where) {
  if (!j.is_object()) bad(where, "expected {lo, hi}");
  only_keys(j, where, {"lo", "hi"});
  Box b{point(require(j, "lo", where), d, where + ".lo"), point(require(j, "hi", where), d, where + ".hi")};
  for (std::size_t k = 0; k < d; ++k) {
    if (!(b.lo[k] < b.hi[k])) bad(where, "lo must be below hi in every coordinate");
  }
  return b;
}

json box_json(const Box& b) { return {{"lo", b.lo}, {"hi", b.hi}}; }

Box box_or_unit(const json& term, const char* key, std::size_t d, const std::string& where) {
  return term.contains(key) ? box(term.at(key), d, where + "." + key) : Box::unit(d);
}

json normalize_birth(const json& t, std::size_t d, const std::string& where) {
  if (!t.is_object()) bad(where, "expected an object");
  if (!t.contains("type") || !t.at("type").is_string()) bad(where + ".type", "missing");
  const auto type = t.at("type").get<std::string>();
  if (type == "contact") {
    only_keys(t, where, {"type", "lambda", "kernel"});
    json kernel = {{"shape", "uniform_ball"}, {"scale", 1.0}};
    if (t.contains("kernel")) {
      const auto& k = t.at("kernel");
      const std::string kw = where + ".kernel";
      if (!k.is_object()) bad(kw, "expected {shape, scale}");
      only_keys(k, kw, {"shape", "scale"});
      if (k.contains("shape")) {
        if (!k.at("shape").is_string()) bad(kw + ".shape", "expected a string");
        const auto shape = k.at("shape").get<std::string>();
        if (shape != "uniform_ball" && shape != "gaussian") bad(kw + ".shape", "unknown kernel '" + shape + "'");
        kernel["shape"] = shape;
      }
      if (k.contains("scale")) kernel["scale"] = positive(k.at("scale"), kw + ".scale");
    }
    return {{"type", type}, {"lambda", nonneg(require(t, "lambda", where), where + ".lambda")}, {"kernel", kernel}};
  }
  if (type == "immigration") {
    only_keys(t, where, {"type", "kappa", "region"});
    return {{"type", type},
            {"kappa", nonneg(require(t, "kappa", where), where + ".kappa")},
            {"region", box_json(box_or_unit(t, "region", d, where))}};
  }
  if (type == "size_power" || type == "superlinear") {
    only_keys(t, where, {"type", "theta", "p", "region"});
    const double p = nonneg(require(t, "p", where), where + ".p");
    if (type == "superlinear" && p < 2) bad(where + ".p", "superlinear births need p >= 2");
    return {{"type", type},
            {"theta", nonneg(require(t, "theta", where), where + ".theta")},
            {"p", p},
            {"region", box_json(box_or_unit(t, "region", d, where))}};
  }
  bad(where + ".type", "unknown birth term '" + type + "'");
}

json normalize_death(const json& t, const std::string& where) {
  if (!t.is_object()) bad(where, "expected an object");
  if (!t.contains("type") || !t.at("type").is_string()) bad(where + ".type", "missing");
  const auto type = t.at("type").get<std::string>();
  if (type == "constant") {
    only_keys(t, where, {"type", "mu"});
    return {{"type", type}, {"mu", nonneg(require(t, "mu", where), where + ".mu")}};
  }
  if (type == "pairwise") {
    only_keys(t, where, {"type", "m0", "amplitude", "radius"});
    return {{"type", type},
            {"m0", nonneg(require(t, "m0", where), where + ".m0")},
            {"amplitude", nonneg(require(t, "amplitude", where), where + ".amplitude")},
            {"radius", positive(require(t, "radius", where), where + ".radius")}};
  }
  bad(where + ".type", "unknown death term '" + type + "'");
}

InitialSpec parse_initial(const json& j, std::size_t d, const std::string& where) {
  if (!j.is_object()) bad(where, "expected {points} or {poisson}");
  only_keys(j, where, {"points", "poisson"});
  InitialSpec s;
  if (j.contains("points") == j.contains("poisson")) bad(where, "give exactly one of points, poisson");
  if (j.contains("points")) {
    const auto& pts = j.at("points");
    if (!pts.is_array()) bad(where + ".points", "expected an array");
    s.kind = InitialSpec::Kind::Points;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      s.points.push_back(point(pts[i], d, where + ".points[" + std::to_string(i) + "]"));
    }
    std::set<Point> seen;
    for (std::size_t i = 0; i < s.points.size(); ++i) {
      if (!seen.insert(s.points[i]).second) bad(where + ".points[" + std::to_string(i) + "]", "duplicate point");
    }
  } else {
    const auto& p = j.at("poisson");
    const std::string pw = where + ".poisson";
    if (!p.is_object()) bad(pw, "expected {intensity, box}");
    only_keys(p, pw, {"intensity", "box"});
    s.kind = InitialSpec::Kind::Poisson;
    s.intensity = nonneg(require(p, "intensity", pw), pw + ".intensity");
    s.box = box_or_unit(p, "box", d, pw);
  }
  return s;
}

json initial_json(const InitialSpec& s) {
  if (s.kind == InitialSpec::Kind::Points) {
    json pts = json::array();
    for (const auto& p : s.points) pts.push_back(p);
    return {{"points", pts}};
  }
  return {{"poisson", {{"intensity", s.intensity}, {"box", box_json(s.box)}}}};
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) { return to_json(a) == to_json(b); }

json normalize_model(const json& descriptor, std::size_t dimension, const std::string& where) {
  if (!descriptor.is_object()) bad(where, "expected an object");
  only_keys(descriptor, where, {"name", "birth", "death", "certificate"});
  json out;
  out["name"] = descriptor.value("name", std::string("model"));
  json births = json::array(), deaths = json::array();
  if (descriptor.contains("birth")) {
    const auto& b = descriptor.at("birth");
    if (!b.is_array()) bad(where + ".birth", "expected an array");
    for (std::size_t i = 0; i < b.size(); ++i)
      births.push_back(normalize_birth(b[i], dimension, where + ".birth[" + std::to_string(i) + "]"));
  }
  if (descriptor.contains("death")) {
    const auto& d = descriptor.at("death");
    if (!d.is_array()) bad(where + ".death", "expected an array");
    for (std::size_t i = 0; i < d.size(); ++i)
      deaths.push_back(normalize_death(d[i], where + ".death[" + std::to_string(i) + "]"));
  }
  out["birth"] = births;
  out["death"] = deaths;
  out["certificate"] = nullptr;
  if (descriptor.contains("certificate") && !descriptor.at("certificate").is_null()) {
    const auto& c = descriptor.at("certificate");
    const std::string cw = where + ".certificate";
    if (!c.is_object()) bad(cw, "expected {c1, c2}");
    only_keys(c, cw, {"c1", "c2"});
    out["certificate"] = {{"c1", nonneg(require(c, "c1", cw), cw + ".c1")},
                          {"c2", nonneg(require(c, "c2", cw), cw + ".c2")}};
  }
  return out;
}

RateModel build_model(const json& descriptor, std::size_t dimension, const std::string& where) {
  const json norm = normalize_model(descriptor, dimension, where);
  std::vector<BirthTerm> births;
  std::vector<DeathTerm> deaths;
  for (const auto& t : norm["birth"]) {
    const auto type = t["type"].get<std::string>();
    if (type == "contact") {
      const double scale = t["kernel"]["scale"].get<double>();
      const Kernel k = t["kernel"]["shape"] == "gaussian" ? Kernel::gaussian(scale) : Kernel::uniform_ball(scale);
      births.push_back(ContactBirth{t["lambda"].get<double>(), k});
    } else if (type == "immigration") {
      births.push_back(ImmigrationBirth{t["kappa"].get<double>(),
                                        Box{t["region"]["lo"].get<Point>(), t["region"]["hi"].get<Point>()}});
    } else {
      births.push_back(SizePowerBirth{t["theta"].get<double>(), t["p"].get<double>(),
                                      Box{t["region"]["lo"].get<Point>(), t["region"]["hi"].get<Point>()}});
    }
  }
  for (const auto& t : norm["death"]) {
    if (t["type"] == "constant") {
      deaths.push_back(ConstantDeath{t["mu"].get<double>()});
    } else {
      deaths.push_back(PairwiseDeath{t["m0"].get<double>(), t["amplitude"].get<double>(), t["radius"].get<double>()});
    }
  }
  RateModel m(norm["name"].get<std::string>(), std::move(births), std::move(deaths));
  if (!norm["certificate"].is_null()) {
    m = m.with_certificate(GrowthCertificate{norm["certificate"]["c1"].get<double>(), norm["certificate"]["c2"].get<double>()});
  }
  return m;
}

ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) bad("config", "expected a JSON object");
  only_keys(j, "config", {"schema", "dimension", "model", "models", "initial", "initial_lower", "horizon", "caps",
                          "n_traj", "master_seed", "options"});
  if (j.contains("schema") && j.at("schema") != kConfigSchema) {
    bad("schema", "unsupported schema (expected " + std::string(kConfigSchema) + ")");
  }
  ExperimentConfig c;
  const auto d = count(require(j, "dimension", "config"), "dimension");
  if (d == 0 || d > 16) bad("dimension", "must be between 1 and 16");
  c.dimension = d;

  if (!j.contains("model") && !j.contains("models")) bad("model", "missing (give model or models)");
  if (j.contains("model")) c.model = normalize_model(j.at("model"), d, "model");
  if (j.contains("models")) {
    const auto& ms = j.at("models");
    if (!ms.is_object()) bad("models", "expected {lower, upper}");
    only_keys(ms, "models", {"lower", "upper"});
    c.lower_model = normalize_model(require(ms, "lower", "models"), d, "models.lower");
    c.upper_model = normalize_model(require(ms, "upper", "models"), d, "models.upper");
  }
  c.initial = parse_initial(require(j, "initial", "config"), d, "initial");
  if (j.contains("initial_lower") && !j.at("initial_lower").is_null()) {
    c.initial_lower = parse_initial(j.at("initial_lower"), d, "initial_lower");
  }
  c.horizon = positive(require(j, "horizon", "config"), "horizon");
  if (j.contains("caps")) {
    const auto& caps = j.at("caps");
    if (!caps.is_object()) bad("caps", "expected {max_population, max_events}");
    only_keys(caps, "caps", {"max_population", "max_events"});
    if (caps.contains("max_population")) c.caps.max_population = count(caps.at("max_population"), "caps.max_population");
    if (caps.contains("max_events")) c.caps.max_events = count(caps.at("max_events"), "caps.max_events");
    if (c.caps.max_population == 0) bad("caps.max_population", "must be positive");
    if (c.caps.max_events == 0) bad("caps.max_events", "must be positive");
  }
  if (j.contains("n_traj")) c.n_traj = count(j.at("n_traj"), "n_traj");
  if (c.n_traj == 0) bad("n_traj", "must be positive");
  if (c.n_traj > (std::uint64_t{1} << 32)) bad("n_traj", "too large");
  if (j.contains("master_seed")) c.master_seed = count(j.at("master_seed"), "master_seed");
  if (j.contains("options")) {
    if (!j.at("options").is_object()) bad("options", "expected an object");
    c.options = j.at("options");
  }
  if (c.initial.kind == InitialSpec::Kind::Points) {
    const auto n = c.initial.points.size();
    if (n >= c.caps.max_population) bad("caps.max_population", "must exceed the initial population");
  }
  return c;
}

ExperimentConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Parse, std::string("config: ") + e.what());
  }
  if (j.is_object() && j.value("schema", std::string()) == kManifestSchema) {
    if (!j.contains("config")) bad("manifest.config", "missing");
    return parse_config(j.at("config"));
  }
  return parse_config(j);
}

ExperimentConfig load_config(const std::filesystem::path& path) { return parse_config_text(read_text_file(path)); }

json to_json(const ExperimentConfig& c) {
  json j;
  j["schema"] = kConfigSchema;
  j["dimension"] = c.dimension;
  if (!c.model.is_null()) j["model"] = c.model;
  if (!c.lower_model.is_null()) j["models"] = {{"lower", c.lower_model}, {"upper", c.upper_model}};
  j["initial"] = initial_json(c.initial);
  j["initial_lower"] = c.initial_lower ? initial_json(*c.initial_lower) : json(nullptr);
  j["horizon"] = c.horizon;
  j["caps"] = {{"max_population", c.caps.max_population}, {"max_events", c.caps.max_events}};
  j["n_traj"] = c.n_traj;
  j["master_seed"] = c.master_seed;
  j["options"] = c.options;
  return j;
}

std::string canonical_text(const ExperimentConfig& cfg) { return to_json(cfg).dump(); }

std::string config_hash(const ExperimentConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical_text(cfg)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return hex64(h);
}

RngStreamKey trajectory_key(std::uint64_t master_seed, std::uint64_t traj) {
  return RngStreamKey{master_seed, traj, Channel::Race, 0};
}

Configuration initial_state(const InitialSpec& spec, std::size_t dimension, std::uint64_t master_seed,
                            std::uint64_t traj) {
  if (spec.kind == InitialSpec::Kind::Points) return Configuration::from_points(dimension, spec.points);
  RandomStream rng(RngStreamKey{master_seed, traj, Channel::Initial, 0});
  // Poisson count by exponential spacings on [0, mean].
  const double mean = spec.intensity * spec.box.volume();
  std::size_t n = 0;
  for (double s = rng.exponential(1.0); s <= mean; s += rng.exponential(1.0)) ++n;
  return random_configuration(n, spec.box, rng);
}

json particles_json(const Configuration& eta) {
  json out = json::array();
  for (std::size_t i = 0; i < eta.size(); ++i) out.push_back({{"id", eta.id(i)}, {"x", point_json(eta.position(i))}});
  return out;
}

json status_json(const TrajectoryStatus& s) {
  json j;
  switch (s.kind) {
    case Termination::Completed: j["status"] = "completed"; break;
    case Termination::Absorbed: j["status"] = "absorbed"; break;
    case Termination::CapHit:
      j["status"] = "cap_hit";
      j["cap_kind"] = s.cap_kind == CapKind::Population ? "population" : "events";
      j["cap"] = s.cap;
      break;
  }
  j["time"] = s.time;
  return j;
}

void write_trajectory_jsonl(std::ostream& os, const Trajectory& traj, std::uint64_t index) {
  json header{{"schema", kTrajectorySchema},
              {"dimension", traj.initial.dimension()},
              {"trajectory", index},
              {"horizon", traj.horizon},
              {"initial", particles_json(traj.initial)}};
  os << header.dump() << '\n';
  for (const auto& e : traj.events) {
    json line{{"t", e.time}, {"kind", e.kind == EventKind::Birth ? "birth" : "death"}, {"id", e.id}, {"x", e.position}};
    os << line.dump() << '\n';
  }
  os << status_json(traj.status).dump() << '\n';
}

void write_audit_jsonl(std::ostream& os, const CoupledPair& pair) {
  for (const auto& a : pair.audit) {
    os << json{{"event", a.event}, {"t", a.time}, {"inclusion", a.inclusion}}.dump() << '\n';
  }
}

std::vector<Point> read_point_list(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  const auto first = text.find_first_not_of(" \t\r\n");
  std::vector<Point> pts;
  if (first != std::string::npos && (text[first] == '[' || text[first] == '{')) {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::Parse, path.string() + ": " + e.what());
    }
    const json& arr = j.is_object() ? j.value("points", json()) : j;
    if (!arr.is_array()) throw Error(ErrorCode::Parse, path.string() + ": expected an array of points");
    for (const auto& p : arr) {
      if (!p.is_array() || p.empty()) throw Error(ErrorCode::Parse, path.string() + ": each point must be a nonempty array");
      Point x;
      for (const auto& c : p) {
        if (!c.is_number()) throw Error(ErrorCode::Parse, path.string() + ": coordinates must be numbers");
        x.push_back(c.get<double>());
      }
      pts.push_back(std::move(x));
    }
  } else {
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      std::istringstream ls(line);
      Point x;
      std::string tok;
      while (ls >> tok) {
        std::size_t used = 0;
        double v = 0;
        try {
          v = std::stod(tok, &used);
        } catch (const std::exception&) {
          used = 0;
        }
        if (used != tok.size()) {
          throw Error(ErrorCode::Parse, path.string() + ":" + std::to_string(lineno) + ": not a number: " + tok);
        }
        x.push_back(v);
      }
      if (!x.empty()) pts.push_back(std::move(x));
    }
  }
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (pts[i].size() != pts[0].size()) throw Error(ErrorCode::Parse, path.string() + ": points differ in dimension");
  }
  return pts;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

std::string dump_document(const json& j) { return j.dump(2) + "\n"; }

}  // namespace bdsim
