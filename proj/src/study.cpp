#include "cboed/study.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>
#include <string_view>

#include "cboed/error.hpp"
#include "cboed/inference.hpp"
#include "cboed/information.hpp"
#include "cboed/models.hpp"
#include "cboed/rng.hpp"

namespace cboed {

namespace {

namespace fs = std::filesystem;

std::string join(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}

void require_object(const Json& j, const std::string& field) {
  if (!j.is_object()) throw ValidationError(field, "must be an object");
}

void reject_unknown(const Json& obj, const std::string& path, std::initializer_list<std::string_view> allowed) {
  for (const auto& item : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      throw ValidationError(join(path, item.key()), "unknown key");
    }
  }
}

const Json* find(const Json& obj, std::string_view key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

const Json& require(const Json& obj, std::string_view key, const std::string& path) {
  const Json* j = find(obj, key);
  if (!j) throw ValidationError(join(path, key), "is required");
  return *j;
}

double number(const Json& j, const std::string& field) {
  if (!j.is_number()) throw ValidationError(field, "must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ValidationError(field, "must be finite");
  return v;
}

std::uint64_t u64(const Json& j, const std::string& field) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer()) {
    if (j.get<std::int64_t>() < 0) throw ValidationError(field, "must be non-negative");
    return static_cast<std::uint64_t>(j.get<std::int64_t>());
  }
  throw ValidationError(field, "must be an integer");
}

std::size_t count(const Json& j, const std::string& field) { return static_cast<std::size_t>(u64(j, field)); }

std::vector<double> numbers(const Json& j, const std::string& field) {
  if (!j.is_array()) throw ValidationError(field, "must be an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], field));
  return out;
}

std::string text(const Json& j, const std::string& field) {
  if (!j.is_string()) throw ValidationError(field, "must be a string");
  return j.get<std::string>();
}

std::array<double, 2> pair_of(const Json& j, const std::string& field) {
  const auto v = numbers(j, field);
  if (v.size() != 2) throw ValidationError(field, "must have two entries");
  return {v[0], v[1]};
}

std::vector<std::array<double, 2>> parse_sensor_list(const Json& j, const std::string& field) {
  if (!j.is_array()) throw ValidationError(field, "must be an array of [x, y] pairs");
  std::vector<std::array<double, 2>> out;
  for (const auto& s : j) {
    out.push_back(pair_of(s, field));
    if (out.back()[0] < 0 || out.back()[0] > 1 || out.back()[1] < 0 || out.back()[1] > 1) {
      throw ValidationError(field, "sensors must lie in the unit square");
    }
  }
  return out;
}

// Model params with every default written out.
Json normalize_model_params(const std::string& name, const Json& params, bool allow_sensors) {
  const std::string path = "model.params";
  require_object(params, path);
  Json out = Json::object();
  if (name == "nonlinear2x2") {
    reject_unknown(params, path, {});
    return out;
  }
  if (name == "convdiff_amplitude") {
    if (allow_sensors) {
      reject_unknown(params, path, {"nx", "ny", "diffusion", "velocity", "source_center", "source_width", "amplitude", "sensors"});
    } else {
      reject_unknown(params, path, {"nx", "ny", "diffusion", "velocity", "source_center", "source_width", "amplitude"});
    }
    const ConvDiffParams d;
    auto get_count = [&](const char* key, std::size_t def) {
      const Json* j = find(params, key);
      const std::size_t v = j ? count(*j, join(path, key)) : def;
      if (v < 8) throw ValidationError(join(path, key), "must be at least 8");
      return v;
    };
    auto get_positive = [&](const char* key, double def) {
      const Json* j = find(params, key);
      const double v = j ? number(*j, join(path, key)) : def;
      if (!(v > 0.0)) throw ValidationError(join(path, key), "must be positive");
      return v;
    };
    auto get_pair = [&](const char* key, std::array<double, 2> def) {
      const Json* j = find(params, key);
      return j ? pair_of(*j, join(path, key)) : def;
    };
    out["nx"] = get_count("nx", d.nx);
    out["ny"] = get_count("ny", d.ny);
    out["diffusion"] = get_positive("diffusion", d.diffusion);
    out["velocity"] = get_pair("velocity", d.velocity);
    out["source_center"] = get_pair("source_center", d.source_center);
    out["source_width"] = get_positive("source_width", d.source_width);
    const auto amp = get_pair("amplitude", {d.amplitude.lo, d.amplitude.hi});
    if (!(amp[0] < amp[1])) throw ValidationError(join(path, "amplitude"), "must satisfy lo < hi");
    out["amplitude"] = amp;
    if (allow_sensors) {
      if (const Json* s = find(params, "sensors")) {
        out["sensors"] = *s;
        parse_sensor_list(*s, join(path, "sensors"));
      }
    }
    return out;
  }
  if (name == "linear_highdim") {
    reject_unknown(params, path, {"n", "k", "weight_seed", "offset"});
    const Json* n = find(params, "n");
    const Json* k = find(params, "k");
    const Json* seed = find(params, "weight_seed");
    out["n"] = n ? count(*n, join(path, "n")) : std::size_t{100};
    out["k"] = k ? count(*k, join(path, "k")) : std::size_t{1};
    if (out["n"].get<std::size_t>() == 0) throw ValidationError(join(path, "n"), "must be at least 1");
    if (out["k"].get<std::size_t>() == 0) throw ValidationError(join(path, "k"), "must be at least 1");
    out["weight_seed"] = seed ? u64(*seed, join(path, "weight_seed")) : std::uint64_t{0};
    std::vector<double> offset(out["k"].get<std::size_t>(), 0.0);
    if (const Json* c = find(params, "offset")) {
      offset = numbers(*c, join(path, "offset"));
      if (offset.size() != out["k"].get<std::size_t>()) {
        throw ValidationError(join(path, "offset"), "needs one entry per QoI");
      }
    }
    out["offset"] = offset;
    return out;
  }
  throw ValidationError("model.name", "unknown model '" + name + "'");
}

bool is_sensor_model(const std::string& name) { return name == "convdiff_amplitude"; }

std::size_t model_qoi_count(const std::string& name, const Json& params) {
  if (name == "nonlinear2x2") return 2;
  if (name == "linear_highdim") return params.at("k").get<std::size_t>();
  return 0;
}

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
  std::size_t a = 0;
  while (a < s.size() && (s[a] == ' ' || s[a] == '\t')) ++a;
  return s.substr(a);
}

double parse_double(const std::string& s, const std::string& field, std::size_t line) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) {
    throw ValidationError(field, "line " + std::to_string(line) + ": '" + s + "' is not a number");
  }
  return v;
}

std::size_t parse_index(const std::string& s, const std::string& field, std::size_t line) {
  std::size_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ValidationError(field, "line " + std::to_string(line) + ": '" + s + "' is not a QoI index");
  }
  return v;
}

// CSV with header "x,y" (sensors) or "qoi_indices" (semicolon-separated).
void read_design_file(DesignsSpec& spec, const fs::path& path) {
  const std::string field = "designs.path";
  std::ifstream in(path);
  if (!in) throw ValidationError(field, "cannot open '" + path.string() + "'");
  std::string line;
  std::size_t lineno = 0;
  std::string header;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    if (header.empty()) {
      header = line;
      if (header != "x,y" && header != "qoi_indices") {
        throw ValidationError(field, "header must be 'x,y' or 'qoi_indices'");
      }
      continue;
    }
    if (header == "x,y") {
      const auto comma = line.find(',');
      if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
        throw ValidationError(field, "line " + std::to_string(lineno) + ": expected x,y");
      }
      const double x = parse_double(trim(line.substr(0, comma)), field, lineno);
      const double y = parse_double(trim(line.substr(comma + 1)), field, lineno);
      if (x < 0 || x > 1 || y < 0 || y > 1) {
        throw ValidationError(field, "line " + std::to_string(lineno) + ": sensor outside the unit square");
      }
      spec.sensors.push_back({x, y});
    } else {
      std::vector<std::size_t> set;
      std::stringstream ss(line);
      std::string item;
      while (std::getline(ss, item, ';')) set.push_back(parse_index(trim(item), field, lineno));
      spec.sets.push_back(std::move(set));
    }
  }
  if (header.empty()) throw ValidationError(field, "design file is empty");
}

DesignsSpec parse_designs(const Json& j, const fs::path& base_dir) {
  const std::string path = "designs";
  require_object(j, path);
  DesignsSpec spec;
  spec.type = text(require(j, "type", path), "designs.type");
  if (spec.type == "grid") {
    reject_unknown(j, path, {"type", "nx", "ny"});
    spec.nx = count(require(j, "nx", path), "designs.nx");
    spec.ny = count(require(j, "ny", path), "designs.ny");
    if (spec.nx == 0) throw ValidationError("designs.nx", "must be at least 1");
    if (spec.ny == 0) throw ValidationError("designs.ny", "must be at least 1");
    for (std::size_t jy = 0; jy < spec.ny; ++jy) {
      for (std::size_t ix = 0; ix < spec.nx; ++ix) {
        spec.sensors.push_back({(static_cast<double>(ix) + 0.5) / static_cast<double>(spec.nx),
                                (static_cast<double>(jy) + 0.5) / static_cast<double>(spec.ny)});
      }
    }
  } else if (spec.type == "random") {
    reject_unknown(j, path, {"type", "count", "seed"});
    spec.count = count(require(j, "count", path), "designs.count");
    if (spec.count == 0) throw ValidationError("designs.count", "must be at least 1");
    spec.seed = u64(require(j, "seed", path), "designs.seed");
    const CounterRng rng(spec.seed, Stream::kSensors);
    for (std::size_t i = 0; i < spec.count; ++i) spec.sensors.push_back({rng.uniform(2 * i), rng.uniform(2 * i + 1)});
  } else if (spec.type == "file") {
    reject_unknown(j, path, {"type", "path"});
    const fs::path p = text(require(j, "path", path), "designs.path");
    const fs::path resolved = p.is_absolute() ? p : (base_dir / p).lexically_normal();
    spec.path = resolved.string();
    read_design_file(spec, resolved);
  } else if (spec.type == "qoi_sets") {
    reject_unknown(j, path, {"type", "sets"});
    const Json& sets = require(j, "sets", path);
    if (!sets.is_array()) throw ValidationError("designs.sets", "must be an array of index arrays");
    for (const auto& s : sets) {
      if (!s.is_array()) throw ValidationError("designs.sets", "must be an array of index arrays");
      std::vector<std::size_t> set;
      for (const auto& v : s) set.push_back(count(v, "designs.sets"));
      spec.sets.push_back(std::move(set));
    }
  } else {
    throw ValidationError("designs.type", "must be one of grid, random, file, qoi_sets");
  }
  if (spec.sensors.empty() && spec.sets.empty()) throw ValidationError("designs", "defines no designs");
  return spec;
}

std::size_t design_count(const DesignsSpec& d) { return d.sensors.empty() ? d.sets.size() : d.sensors.size(); }

std::size_t design_dims(const DesignsSpec& d, std::size_t id) { return d.sensors.empty() ? d.sets[id].size() : 1; }

std::size_t max_design_dims(const DesignsSpec& d) {
  std::size_t m = 0;
  for (std::size_t i = 0; i < design_count(d); ++i) m = std::max(m, design_dims(d, i));
  return m;
}

Command parse_command(const std::string& s) {
  if (s == "eig") return Command::kEig;
  if (s == "oed") return Command::kOed;
  if (s == "infer") return Command::kInfer;
  if (s == "pushforward") return Command::kPushforward;
  if (s == "models") return Command::kModels;
  throw ValidationError("command", "must be one of eig, oed, infer, pushforward, models");
}

int line_of_offset(const std::string& text, std::size_t byte) {
  const std::size_t end = std::min(byte > 0 ? byte - 1 : 0, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(end), '\n'));
}

}  // namespace

const std::vector<std::string>& builtin_models() {
  static const std::vector<std::string> names{"nonlinear2x2", "convdiff_amplitude", "linear_highdim"};
  return names;
}

const char* to_string(Command c) {
  switch (c) {
    case Command::kEig: return "eig";
    case Command::kOed: return "oed";
    case Command::kInfer: return "infer";
    case Command::kPushforward: return "pushforward";
    case Command::kModels: return "models";
  }
  return "unknown";
}

std::unique_ptr<ForwardModel> make_model(const std::string& name, const Json& params,
                                         const std::vector<std::array<double, 2>>* sensors) {
  const Json p = normalize_model_params(name, params.is_null() ? Json::object() : params, sensors == nullptr);
  if (name == "nonlinear2x2") return std::make_unique<Nonlinear2x2>();
  if (name == "convdiff_amplitude") {
    ConvDiffParams d;
    d.nx = p["nx"].get<std::size_t>();
    d.ny = p["ny"].get<std::size_t>();
    d.diffusion = p["diffusion"].get<double>();
    d.velocity = p["velocity"].get<std::array<double, 2>>();
    d.source_center = p["source_center"].get<std::array<double, 2>>();
    d.source_width = p["source_width"].get<double>();
    const auto amp = p["amplitude"].get<std::array<double, 2>>();
    d.amplitude = {amp[0], amp[1]};
    std::vector<std::array<double, 2>> s;
    if (sensors) s = *sensors;
    else if (const Json* js = find(p, "sensors")) s = parse_sensor_list(*js, "model.params.sensors");
    if (s.empty()) throw ValidationError("model.params.sensors", "convdiff_amplitude needs at least one sensor");
    return std::make_unique<ConvDiffAmplitude>(d, std::move(s));
  }
  return std::make_unique<LinearModel>(linear_highdim(p["n"].get<std::size_t>(), p["k"].get<std::size_t>(),
                                                      p["weight_seed"].get<std::uint64_t>(),
                                                      p["offset"].get<std::vector<double>>()));
}

StudyConfig parse_config(const std::string& text_in, const fs::path& base_dir) {
  Json root;
  try {
    root = Json::parse(text_in);
  } catch (const Json::parse_error& e) {
    std::string msg = e.what();
    // Drop the library's "[json.exception.parse_error.101] " prefix.
    if (const auto pos = msg.find("] "); pos != std::string::npos) msg = msg.substr(pos + 2);
    throw ParseError(line_of_offset(text_in, e.byte), msg);
  }
  require_object(root, "config");
  reject_unknown(root, "", {"command", "model", "seed", "n_samples", "m_centers", "noise", "designs", "oed", "kde",
                            "observation", "pushforward", "output"});

  StudyConfig c;
  c.command = parse_command(text(require(root, "command", ""), "command"));
  if (const Json* o = find(root, "output")) c.output = text(*o, "output");
  if (c.command == Command::kModels) {
    for (const auto& item : root.items()) {
      if (item.key() != "command" && item.key() != "output") {
        throw ValidationError(item.key(), "not used by the models command");
      }
    }
    return c;
  }

  const Json& model = require(root, "model", "");
  require_object(model, "model");
  reject_unknown(model, "model", {"name", "params"});
  c.model_name = text(require(model, "name", "model"), "model.name");
  const Json* params = find(model, "params");
  c.model_params = normalize_model_params(c.model_name, params ? *params : Json::object(), false);

  if (const Json* s = find(root, "seed")) c.seed = u64(*s, "seed");
  c.n_samples = count(require(root, "n_samples", ""), "n_samples");
  if (c.n_samples < 2) throw ValidationError("n_samples", "must be at least 2");
  c.m_centers = c.n_samples;
  if (const Json* m = find(root, "m_centers")) {
    c.m_centers = count(*m, "m_centers");
    if (c.m_centers == 0 || c.m_centers > c.n_samples) throw ValidationError("m_centers", "must lie in [1, n_samples]");
  }

  if (const Json* n = find(root, "noise")) {
    require_object(*n, "noise");
    const std::string type = text(require(*n, "type", "noise"), "noise.type");
    if (type == "fixed") {
      reject_unknown(*n, "noise", {"type", "sigma"});
      c.noise = NoiseModel::fixed(numbers(require(*n, "sigma", "noise"), "noise.sigma"));
    } else if (type == "affine") {
      reject_unknown(*n, "noise", {"type", "a", "b"});
      c.noise = NoiseModel::affine(number(require(*n, "a", "noise"), "noise.a"),
                                   number(require(*n, "b", "noise"), "noise.b"));
    } else {
      throw ValidationError("noise.type", "must be fixed or affine");
    }
  }

  const Json& designs = require(root, "designs", "");
  c.designs = parse_designs(designs, base_dir);
  const DesignsSpec& ds = *c.designs;
  if (is_sensor_model(c.model_name)) {
    if (ds.sensors.empty()) {
      throw ValidationError("designs.type", "convdiff_amplitude takes sensor designs (grid, random, or a file of x,y)");
    }
  } else {
    if (!ds.sensors.empty()) throw ValidationError("designs.type", c.model_name + " has no sensor locations; use qoi_sets");
    const std::size_t k = model_qoi_count(c.model_name, c.model_params);
    for (const auto& set : ds.sets) {
      if (set.empty()) throw ValidationError("designs.sets", "every design needs at least one QoI");
      if (set.size() > kMaxKdeDims) throw ValidationError("designs.sets", "a design may select at most 4 QoI");
      std::set<std::size_t> seen;
      for (std::size_t q : set) {
        if (q >= k) throw ValidationError("designs.sets", "QoI index " + std::to_string(q) + " out of range");
        if (!seen.insert(q).second) throw ValidationError("designs.sets", "QoI index " + std::to_string(q) + " repeated");
      }
    }
  }
  const std::size_t z = design_count(ds);

  if (c.noise) {
    if (const auto* f = std::get_if<NoiseModel::Fixed>(&c.noise->variant())) {
      for (std::size_t i = 0; i < z; ++i) {
        if (f->sigma.size() != 1 && f->sigma.size() != design_dims(ds, i)) {
          throw ValidationError("noise.sigma", "needs one value, or one per QoI of every design");
        }
      }
    }
  }

  if (const Json* o = find(root, "oed")) {
    require_object(*o, "oed");
    reject_unknown(*o, "oed", {"mode", "k"});
    if (const Json* m = find(*o, "mode")) c.oed_mode = text(*m, "oed.mode");
    if (c.oed_mode != "exhaustive" && c.oed_mode != "greedy") throw ValidationError("oed.mode", "must be exhaustive or greedy");
    if (const Json* k = find(*o, "k")) c.oed_k = count(*k, "oed.k");
    if (c.oed_k == 0 || c.oed_k > z) throw ValidationError("oed.k", "must lie in [1, number of designs]");
  }

  if (const Json* k = find(root, "kde")) {
    require_object(*k, "kde");
    reject_unknown(*k, "kde", {"bandwidth", "floor"});
    if (const Json* b = find(*k, "bandwidth")) {
      if (b->is_string()) {
        const std::string s = b->get<std::string>();
        if (s == "silverman") c.bandwidth = BandwidthRule::silverman();
        else if (s == "scott") c.bandwidth = BandwidthRule::scott();
        else throw ValidationError("kde.bandwidth", "must be silverman, scott or {\"fixed\": [...]}");
      } else if (b->is_object()) {
        reject_unknown(*b, "kde.bandwidth", {"fixed"});
        auto h = numbers(require(*b, "fixed", "kde.bandwidth"), "kde.bandwidth.fixed");
        for (double v : h) {
          if (!(v > 0.0)) throw ValidationError("kde.bandwidth.fixed", "must be positive");
        }
        c.bandwidth = BandwidthRule::fixed_vector(std::move(h));
      } else {
        throw ValidationError("kde.bandwidth", "must be silverman, scott or {\"fixed\": [...]}");
      }
    }
    if (const Json* f = find(*k, "floor")) {
      c.floor = number(*f, "kde.floor");
      if (!(c.floor > 0.0)) throw ValidationError("kde.floor", "must be positive");
    }
  }

  if (const Json* o = find(root, "observation")) {
    require_object(*o, "observation");
    reject_unknown(*o, "observation", {"design", "center", "sigma"});
    StudyConfig::Observation obs;
    obs.design = count(require(*o, "design", "observation"), "observation.design");
    if (obs.design >= z) throw ValidationError("observation.design", "no such design");
    const std::size_t m = design_dims(ds, obs.design);
    obs.center = numbers(require(*o, "center", "observation"), "observation.center");
    if (obs.center.size() != m) throw ValidationError("observation.center", "needs one value per QoI of the design");
    obs.sigma = numbers(require(*o, "sigma", "observation"), "observation.sigma");
    if (obs.sigma.size() != m) throw ValidationError("observation.sigma", "needs one value per QoI of the design");
    for (double s : obs.sigma) {
      if (!(s > 0.0)) throw ValidationError("observation.sigma", "must be positive");
    }
    c.observation = std::move(obs);
  }

  if (const Json* p = find(root, "pushforward")) {
    require_object(*p, "pushforward");
    reject_unknown(*p, "pushforward", {"design", "grid"});
    if (const Json* d = find(*p, "design")) c.pushforward_design = count(*d, "pushforward.design");
    if (const Json* g = find(*p, "grid")) c.pushforward_grid = count(*g, "pushforward.grid");
    if (c.pushforward_grid < 2 || c.pushforward_grid > 4000) throw ValidationError("pushforward.grid", "must lie in [2, 4000]");
  }

  const std::size_t max_dims = max_design_dims(ds);
  switch (c.command) {
    case Command::kEig:
    case Command::kOed:
      if (!c.noise) throw ValidationError("noise", "is required for " + std::string(to_string(c.command)));
      if (c.command == Command::kOed && c.oed_k > 1) {
        if (c.oed_k * max_dims > kMaxKdeDims) {
          throw ValidationError("oed.k", "combined design would exceed 4 data dimensions");
        }
        if (c.oed_mode == "exhaustive") {
          std::size_t subsets = 1;
          for (std::size_t i = 0; i < c.oed_k; ++i) {
            subsets = subsets * (z - i) / (i + 1);
            if (subsets > kMaxSubsetCount) {
              throw ValidationError("oed.k", "exhaustive search over more than 20000 subsets; use greedy");
            }
          }
        }
      }
      break;
    case Command::kInfer:
      if (!c.observation) throw ValidationError("observation", "is required for infer");
      break;
    case Command::kPushforward:
      if (c.pushforward_design >= z) throw ValidationError("pushforward.design", "no such design");
      if (design_dims(ds, c.pushforward_design) > 2) {
        throw ValidationError("pushforward.design", "grid output supports at most two QoI");
      }
      break;
    case Command::kModels: break;
  }
  if (c.bandwidth.kind == BandwidthRule::Kind::kFixed) {
    for (std::size_t i = 0; i < z; ++i) {
      if (c.bandwidth.fixed.size() != design_dims(ds, i) &&
          !(c.command == Command::kOed && c.oed_k > 1)) {
        throw ValidationError("kde.bandwidth.fixed", "needs one value per QoI of every design");
      }
    }
  }
  return c;
}

StudyConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("config", "cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

Json StudyConfig::effective() const {
  Json j = Json::object();
  j["command"] = to_string(command);
  if (command == Command::kModels) return j;
  j["model"] = {{"name", model_name}, {"params", model_params}};
  j["seed"] = seed;
  j["n_samples"] = n_samples;
  j["m_centers"] = m_centers;
  if (noise) {
    if (const auto* f = std::get_if<NoiseModel::Fixed>(&noise->variant())) {
      j["noise"] = {{"type", "fixed"}, {"sigma", f->sigma}};
    } else {
      const auto& a = std::get<NoiseModel::Affine>(noise->variant());
      j["noise"] = {{"type", "affine"}, {"a", a.a}, {"b", a.b}};
    }
  }
  if (designs) {
    Json d = {{"type", designs->type}};
    if (designs->type == "grid") {
      d["nx"] = designs->nx;
      d["ny"] = designs->ny;
    } else if (designs->type == "random") {
      d["count"] = designs->count;
      d["seed"] = designs->seed;
    } else if (designs->type == "file") {
      d["path"] = designs->path;
    } else {
      d["sets"] = designs->sets;
    }
    j["designs"] = d;
  }
  j["oed"] = {{"mode", oed_mode}, {"k", oed_k}};
  Json bw;
  switch (bandwidth.kind) {
    case BandwidthRule::Kind::kSilverman: bw = "silverman"; break;
    case BandwidthRule::Kind::kScott: bw = "scott"; break;
    case BandwidthRule::Kind::kFixed: bw = {{"fixed", bandwidth.fixed}}; break;
  }
  j["kde"] = {{"bandwidth", bw}, {"floor", floor}};
  if (observation) {
    j["observation"] = {{"design", observation->design}, {"center", observation->center}, {"sigma", observation->sigma}};
  }
  j["pushforward"] = {{"design", pushforward_design}, {"grid", pushforward_grid}};
  return j;
}

DesignSpace build_design_space(const StudyConfig& config, const ForwardModel& model) {
  if (!config.designs) throw ValidationError("designs", "is required");
  DesignSpace space;
  const DesignsSpec& d = *config.designs;
  if (!d.sensors.empty()) {
    space.description = d.type + " sensors";
    for (std::size_t i = 0; i < d.sensors.size(); ++i) {
      space.candidates.push_back({i, {i}, {model.qoi_coords(i)}});
    }
  } else {
    space.description = "QoI sets";
    for (std::size_t i = 0; i < d.sets.size(); ++i) space.candidates.push_back({i, d.sets[i], {}});
  }
  return space;
}

std::string format_g6(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string report_csv(const EigReport& report) {
  std::size_t coord_cols = 0;
  for (const auto& r : report.rows) coord_cols = std::max(coord_cols, r.coords.size());
  std::string s = "design_id";
  for (std::size_t c = 0; c < coord_cols; ++c) s += ",coord_" + std::to_string(c);
  s += ",eig,n_infeasible,status\n";
  for (const auto& r : report.rows) {
    s += std::to_string(r.id);
    for (std::size_t c = 0; c < coord_cols; ++c) s += "," + (c < r.coords.size() ? format_g6(r.coords[c]) : "");
    s += "," + (r.ok ? format_g6(r.eig) : std::string("nan"));
    s += "," + std::to_string(r.n_infeasible);
    s += "," + r.status + "\n";
  }
  return s;
}

namespace {

void write_atomic(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::kIoError, "cannot write '" + tmp.string() + "'");
    f << content;
    f.flush();
    if (!f) throw Error(ErrorCode::kIoError, "write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorCode::kIoError, "cannot move report into '" + path.string() + "'");
  }
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

Json row_json(const EigRow& r) {
  Json j = {{"id", r.id}, {"qoi_indices", r.qoi_indices}, {"coords", r.coords}};
  j["eig"] = r.ok ? Json(r.eig) : Json(nullptr);
  j["n_infeasible"] = r.n_infeasible;
  j["n_normalized"] = r.n_normalized;
  j["status"] = r.status;
  if (!r.message.empty()) j["message"] = r.message;
  if (!r.warnings.empty()) j["warnings"] = r.warnings;
  return j;
}

Json flags_json(const std::vector<const EigReport*>& reports) {
  std::size_t normalized = 0, infeasible = 0, failed = 0;
  std::set<std::string> warnings;
  for (const EigReport* rep : reports) {
    for (const auto& r : rep->rows) {
      normalized += r.n_normalized;
      infeasible += r.n_infeasible;
      if (!r.ok) ++failed;
      warnings.insert(r.warnings.begin(), r.warnings.end());
    }
  }
  return {{"infeasible_data_normalized", normalized > 0},
          {"normalized_centers", normalized},
          {"infeasible_centers", infeasible},
          {"failed_designs", failed},
          {"warnings", std::vector<std::string>(warnings.begin(), warnings.end())}};
}

struct Prepared {
  std::unique_ptr<ForwardModel> model;
  DesignSpace space;
  SampleSet samples;
};

Prepared prepare(const StudyConfig& c, Parallelism par) {
  Prepared p;
  const auto* sensors = (c.designs && !c.designs->sensors.empty()) ? &c.designs->sensors : nullptr;
  std::vector<std::array<double, 2>> none;
  p.model = make_model(c.model_name, c.model_params, sensors ? sensors : &none);
  p.space = build_design_space(c, *p.model);
  const UniformPrior prior(p.model->space());
  p.samples = evaluate_designs(*p.model, sample_prior(prior, c.n_samples, c.seed), par);
  return p;
}

Json base_summary(const StudyConfig& c, const Prepared& p) {
  Json j = Json::object();
  j["command"] = to_string(c.command);
  j["config"] = c.effective();
  j["model"] = p.model->name();
  j["seed"] = c.seed;
  j["n_samples"] = c.n_samples;
  j["m_centers"] = c.m_centers;
  j["estimator"] = to_string(KlEstimator::kPriorMean);
  j["units"] = "nats";
  j["n_designs"] = p.space.size();
  return j;
}

EigOptions eig_options(const StudyConfig& c, Parallelism par) {
  EigOptions o;
  o.bandwidth = c.bandwidth;
  o.floor = c.floor;
  o.parallelism = par;
  return o;
}

Json chosen_json(const EigReport& report) {
  for (const auto& r : report.rows) {
    if (r.id == report.chosen && r.ok) return row_json(r);
  }
  return nullptr;
}

void run_eig(const StudyConfig& c, const fs::path& dir, Parallelism par, std::ostream& out, bool quiet) {
  const Prepared p = prepare(c, par);
  const EigReport report = rank_designs(p.samples, p.space, *c.noise, c.m_centers, eig_options(c, par));
  Json s = base_summary(c, p);
  s["ranking"] = report.ranking;
  s["chosen"] = chosen_json(report);
  s["flags"] = flags_json({&report});
  Json rows = Json::array();
  for (const auto& r : report.rows) rows.push_back(row_json(r));
  s["designs"] = rows;
  write_atomic(dir / "report.csv", report_csv(report));
  write_atomic(dir / "summary.json", dump(s));
  if (!quiet) {
    out << "evaluated " << report.rows.size() << " designs; best design " << report.chosen;
    if (!report.rows.empty() && report.rows[report.chosen].ok) out << " (eig " << format_g6(report.rows[report.chosen].eig) << ")";
    out << "\nwrote " << (dir / "report.csv").string() << " and " << (dir / "summary.json").string() << "\n";
  }
}

void run_oed(const StudyConfig& c, const fs::path& dir, Parallelism par, std::ostream& out, bool quiet) {
  const Prepared p = prepare(c, par);
  const EigOptions opts = eig_options(c, par);
  Json s = base_summary(c, p);
  s["mode"] = c.oed_mode;
  s["k"] = c.oed_k;

  if (c.oed_mode == "greedy") {
    const GreedyResult g = greedy_oed(p.samples, p.space, c.oed_k, *c.noise, c.m_centers, opts);
    std::vector<const EigReport*> reps;
    Json steps = Json::array();
    for (std::size_t t = 0; t < g.steps.size(); ++t) {
      const auto& st = g.steps[t];
      reps.push_back(&st.report);
      steps.push_back({{"step", t + 1}, {"chosen", st.chosen}, {"eig", st.eig}, {"ranking", st.report.ranking}});
      write_atomic(dir / ("greedy_step_" + std::to_string(t + 1) + ".csv"), report_csv(st.report));
    }
    write_atomic(dir / "report.csv", report_csv(g.steps.front().report));
    s["chosen"] = g.chosen;
    Json chosen_designs = Json::array();
    for (std::size_t id : g.chosen) {
      Json cd = {{"id", id}, {"qoi_indices", p.space.candidates[id].qoi_indices}};
      std::vector<double> flat;
      for (const auto& co : p.space.candidates[id].coords) flat.insert(flat.end(), co.begin(), co.end());
      cd["coords"] = flat;
      chosen_designs.push_back(cd);
    }
    s["chosen_designs"] = chosen_designs;
    s["eig"] = g.steps.back().eig;
    s["greedy_steps"] = steps;
    s["flags"] = flags_json(reps);
    write_atomic(dir / "summary.json", dump(s));
    if (!quiet) {
      out << "greedy selection:";
      for (std::size_t id : g.chosen) out << " " << id;
      out << " (eig " << format_g6(g.steps.back().eig) << ")\n";
    }
    return;
  }

  if (c.oed_k == 1) {
    const EigReport report = rank_designs(p.samples, p.space, *c.noise, c.m_centers, opts);
    const DesignCandidate best = exhaustive_oed(report, p.space);
    s["ranking"] = report.ranking;
    s["chosen"] = std::vector<std::size_t>{best.id};
    s["chosen_designs"] = Json::array({chosen_json(report)});
    s["eig"] = report.rows[best.id].eig;
    s["flags"] = flags_json({&report});
    write_atomic(dir / "report.csv", report_csv(report));
    write_atomic(dir / "summary.json", dump(s));
    if (!quiet) out << "optimal design " << best.id << " (eig " << format_g6(report.rows[best.id].eig) << ")\n";
    return;
  }

  const SubsetResult r = exhaustive_subsets(p.samples, p.space, c.oed_k, *c.noise, c.m_centers, opts);
  const EigRow& best = r.report.rows[r.report.chosen];
  if (!best.ok) throw Error(ErrorCode::kEmptyDesignSpace, "no subset was evaluated successfully");
  s["subsets"] = r.subsets;
  s["ranking"] = r.report.ranking;
  s["chosen"] = r.subsets[best.id];
  s["chosen_subset_row"] = best.id;
  s["eig"] = best.eig;
  s["flags"] = flags_json({&r.report});
  write_atomic(dir / "report.csv", report_csv(r.report));
  write_atomic(dir / "summary.json", dump(s));
  if (!quiet) {
    out << "optimal subset:";
    for (std::size_t id : r.subsets[best.id]) out << " " << id;
    out << " (eig " << format_g6(best.eig) << ")\n";
  }
}

void run_infer(const StudyConfig& c, const fs::path& dir, Parallelism par, std::ostream& out, bool quiet) {
  const Prepared p = prepare(c, par);
  const auto& o = *c.observation;
  const DesignCandidate& design = p.space.candidates[o.design];
  const DataSpace ds = select_design(p.samples, design);
  const PushForward pf = fit_push_forward(ds, c.bandwidth, c.floor, design.id, par);
  ObservedDensity obs(o.center, o.sigma);
  const PosteriorRatios ratios = posterior_ratios(pf, obs, ds);
  const double info = kl_from_ratios(ratios);
  const PosteriorSamples post = rejection_sample(ratios, c.seed);

  Json s = base_summary(c, p);
  s["design"] = {{"id", design.id}, {"qoi_indices", design.qoi_indices}};
  s["norm_constant"] = ratios.norm_constant;
  s["infeasible_data_normalized"] = ratios.normalized_flag;
  s["information_gain"] = info;
  s["n_accepted"] = post.accepted_indices.size();
  s["acceptance_rate"] = post.acceptance_rate;
  try {
    s["consistency_error"] = consistency_error(post, p.samples, design, obs);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kTooFewAccepted && e.code() != ErrorCode::kDimensionCapExceeded) throw;
    s["consistency_error"] = nullptr;
    s["consistency_note"] = e.what();
  }

  const std::size_t n = p.samples.space().dims();
  std::string csv = "sample_index";
  for (std::size_t d = 0; d < n; ++d) csv += ",lambda_" + std::to_string(d);
  for (std::size_t d = 0; d < ds.dims; ++d) csv += ",q_" + std::to_string(d);
  csv += "\n";
  for (std::size_t i : post.accepted_indices) {
    csv += std::to_string(i);
    for (double v : p.samples.params().row(i)) csv += "," + format_g6(v);
    for (double v : ds.cloud.row(i)) csv += "," + format_g6(v);
    csv += "\n";
  }
  write_atomic(dir / "accepted.csv", csv);
  write_atomic(dir / "posterior.json", dump(s));
  if (!quiet) {
    out << "information gain " << format_g6(info) << " nats, C = " << format_g6(ratios.norm_constant) << ", accepted "
        << post.accepted_indices.size() << " of " << p.samples.size() << "\n";
  }
}

void run_pushforward(const StudyConfig& c, const fs::path& dir, Parallelism par, std::ostream& out, bool quiet) {
  const Prepared p = prepare(c, par);
  const DesignCandidate& design = p.space.candidates[c.pushforward_design];
  const DataSpace ds = select_design(p.samples, design);
  const GaussianKde kde = GaussianKde::fit(ds.cloud, c.bandwidth);
  const std::size_t g = c.pushforward_grid;
  const std::size_t total = ds.dims == 1 ? g : g * g;
  Matrix grid(total, ds.dims);
  for (std::size_t k = 0; k < total; ++k) {
    for (std::size_t d = 0; d < ds.dims; ++d) {
      const std::size_t idx = d == 0 ? k % g : k / g;
      grid(k, d) = ds.ranges[d].lo + (static_cast<double>(idx) + 0.5) * ds.ranges[d].width() / static_cast<double>(g);
    }
  }
  const std::vector<double> density = kde.eval_many(grid, par);
  std::string csv;
  for (std::size_t d = 0; d < ds.dims; ++d) csv += "q_" + std::to_string(d) + ",";
  csv += "density\n";
  for (std::size_t k = 0; k < total; ++k) {
    for (double v : grid.row(k)) csv += format_g6(v) + ",";
    csv += format_g6(density[k]) + "\n";
  }
  Json s = base_summary(c, p);
  s["design"] = {{"id", design.id}, {"qoi_indices", design.qoi_indices}};
  s["bandwidth"] = kde.bandwidth();
  Json ranges = Json::array();
  for (const auto& r : ds.ranges) ranges.push_back({r.lo, r.hi});
  s["ranges"] = ranges;
  s["grid"] = g;
  write_atomic(dir / "pushforward.csv", csv);
  write_atomic(dir / "summary.json", dump(s));
  if (!quiet) out << "wrote " << total << " density values to " << (dir / "pushforward.csv").string() << "\n";
}

}  // namespace

int run_command(const StudyConfig& config, const RunOptions& options, std::ostream& out, std::ostream& err) {
  try {
    if (config.command == Command::kModels) {
      for (const auto& name : builtin_models()) out << name << "\n";
      const std::string dir = options.output.value_or(config.output);
      if (!dir.empty()) {
        fs::create_directories(dir);
        write_atomic(fs::path(dir) / "models.json", dump(Json{{"models", builtin_models()}}));
      }
      return 0;
    }
    const std::string dir_s = options.output.value_or(config.output);
    if (dir_s.empty()) throw ValidationError("output", "is required (config key or --output)");
    const fs::path dir(dir_s);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw Error(ErrorCode::kIoError, "cannot create output directory '" + dir_s + "'");

    switch (config.command) {
      case Command::kEig: run_eig(config, dir, options.parallelism, out, options.quiet); break;
      case Command::kOed: run_oed(config, dir, options.parallelism, out, options.quiet); break;
      case Command::kInfer: run_infer(config, dir, options.parallelism, out, options.quiet); break;
      case Command::kPushforward: run_pushforward(config, dir, options.parallelism, out, options.quiet); break;
      case Command::kModels: break;
    }
    return 0;
  } catch (const ValidationError& e) {
    err << "invalid config: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    err << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

int run_study(const fs::path& config_path, const RunOptions& options, std::ostream& out, std::ostream& err) {
  StudyConfig config;
  try {
    config = load_config(config_path);
  } catch (const ParseError& e) {
    err << config_path.string() << ": parse error at " << e.what() << "\n";
    return 1;
  } catch (const ValidationError& e) {
    err << config_path.string() << ": invalid config: " << e.what() << "\n";
    return 1;
  }
  return run_command(config, options, out, err);
}

}  // namespace cboed
