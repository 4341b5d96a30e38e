#include "prs3/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "prs3/errors.hpp"
#include "prs3/rotation.hpp"

namespace prs3 {

namespace {

using json = nlohmann::json;

const std::set<std::string> kTopLevelKeys = {
    "r_base",       "r_platform",       "link_length",     "limb_count",
    "tilt_limit",   "tilt_limit_deg",   "heave",           "assembly_mode",
    "compliance_model", "characteristic_length", "axial", "torsional",
    "spherical_axes_k", "parametric"};

const std::vector<std::pair<std::string, std::set<std::string>>> kSections = {
    {"axial", {"k_carriage", "k_revolute", "k_limb_body"}},
    {"torsional", {"k_spherical", "k_limb_body_t", "k_spherical_per_rad", "k_limb_body_t_per_rad"}},
    {"spherical_axes_k", {"k_six", "k_siy", "k_siz"}},
    {"parametric",
     {"EA_leadscrew", "EA_link", "k_guiderail", "k_slider", "screw_length_offset"}},
};

const std::set<std::string>& section_keys(const std::string& section) {
  for (const auto& [name, keys] : kSections) {
    if (name == section) return keys;
  }
  throw ConfigError(section, "unknown section");
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

json parse_override_value(const std::string& raw) {
  try {
    return json::parse(raw);
  } catch (const json::parse_error&) {
    return json(raw);
  }
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError(assignment, "override must have the form key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const json value = parse_override_value(assignment.substr(eq + 1));

  std::vector<std::string> path = split(key, '.');
  if (path.size() == 1 && !kTopLevelKeys.count(key)) {
    // Bare leaf name: find the one section that owns it.
    std::vector<std::string> owners;
    for (const auto& [section, keys] : kSections) {
      if (keys.count(key)) owners.push_back(section);
    }
    if (owners.size() != 1) {
      throw ConfigError(key, owners.empty() ? "unknown key" : "ambiguous key, use section.key");
    }
    path.insert(path.begin(), owners.front());
  }
  if (path.size() > 2) throw ConfigError(key, "nesting deeper than section.key");

  json* node = &doc;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    json& child = (*node)[path[i]];
    if (child.is_null()) child = json::object();
    if (!child.is_object()) throw ConfigError(key, "'" + path[i] + "' is not a section");
    node = &child;
  }
  (*node)[path.back()] = value;
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& prefix) {
  for (const auto& [k, v] : obj.items()) {
    if (!allowed.count(k)) throw ConfigError(prefix + k, "unknown key");
  }
}

double read_number(const json& obj, const std::string& key, const std::string& full_key,
                   double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(full_key, "must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(full_key, "must be finite");
  return x;
}

double require_number(const json& obj, const std::string& key, const std::string& full_key) {
  if (!obj.contains(key)) throw ConfigError(full_key, "missing required parameter");
  return read_number(obj, key, full_key, 0.0);
}

void require_positive(double value, const std::string& key) {
  if (!(value > 0.0)) throw ConfigError(key, "must be strictly positive");
}

const json& section(const json& doc, const std::string& name) {
  static const json empty = json::object();
  if (!doc.contains(name)) return empty;
  const json& s = doc.at(name);
  if (!s.is_object()) throw ConfigError(name, "must be an object");
  reject_unknown(s, section_keys(name), name + ".");
  return s;
}

ManipulatorConfig from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("<root>", "document must be a JSON object");
  reject_unknown(doc, kTopLevelKeys, "");

  ManipulatorConfig c;
  c.r_base = read_number(doc, "r_base", "r_base", c.r_base);
  c.r_platform = read_number(doc, "r_platform", "r_platform", c.r_platform);
  c.link_length = read_number(doc, "link_length", "link_length", c.link_length);
  c.heave = read_number(doc, "heave", "heave", c.heave);
  c.characteristic_length =
      read_number(doc, "characteristic_length", "characteristic_length", c.characteristic_length);

  if (doc.contains("limb_count")) {
    const json& v = doc.at("limb_count");
    if (!v.is_number_integer() || v.get<int>() != 3) {
      throw ConfigError("limb_count", "only 3 limbs are supported");
    }
  }

  if (doc.contains("tilt_limit") && doc.contains("tilt_limit_deg")) {
    throw ConfigError("tilt_limit", "give either tilt_limit or tilt_limit_deg, not both");
  }
  c.tilt_limit = read_number(doc, "tilt_limit", "tilt_limit", c.tilt_limit);
  if (doc.contains("tilt_limit_deg")) {
    const double deg = require_number(doc, "tilt_limit_deg", "tilt_limit_deg");
    if (!(deg > 0.0 && deg < 90.0)) throw ConfigError("tilt_limit_deg", "must lie in (0, 90)");
    c.tilt_limit = deg2rad(deg);
  }

  if (doc.contains("assembly_mode")) {
    const json& v = doc.at("assembly_mode");
    if (v == "elbow_below") {
      c.assembly_mode = AssemblyMode::elbow_below;
    } else if (v == "elbow_above") {
      c.assembly_mode = AssemblyMode::elbow_above;
    } else {
      throw ConfigError("assembly_mode", "expected \"elbow_below\" or \"elbow_above\"");
    }
  }

  const json& axial = section(doc, "axial");
  c.axial.k_carriage = read_number(axial, "k_carriage", "axial.k_carriage", c.axial.k_carriage);
  c.axial.k_revolute = read_number(axial, "k_revolute", "axial.k_revolute", c.axial.k_revolute);
  c.axial.k_limb_body =
      read_number(axial, "k_limb_body", "axial.k_limb_body", c.axial.k_limb_body);

  // Torsional values arrive per degree unless the _per_rad spelling is used.
  const json& tors = section(doc, "torsional");
  auto torsional = [&](const std::string& key, double fallback) {
    const std::string rad_key = key + "_per_rad";
    if (tors.contains(key) && tors.contains(rad_key)) {
      throw ConfigError("torsional." + key, "give either " + key + " or " + rad_key);
    }
    if (tors.contains(rad_key)) return require_number(tors, rad_key, "torsional." + rad_key);
    if (tors.contains(key)) {
      const double per_deg = require_number(tors, key, "torsional." + key);
      require_positive(per_deg, "torsional." + key);
      return per_deg_to_per_rad(per_deg);
    }
    return fallback;
  };
  c.torsional.k_spherical = torsional("k_spherical", c.torsional.k_spherical);
  c.torsional.k_limb_body_t = torsional("k_limb_body_t", c.torsional.k_limb_body_t);

  const json& axes = section(doc, "spherical_axes_k");
  const double iso = c.torsional.k_spherical;
  c.spherical_axes.k_six = read_number(axes, "k_six", "spherical_axes_k.k_six", iso);
  c.spherical_axes.k_siy = read_number(axes, "k_siy", "spherical_axes_k.k_siy", iso);
  c.spherical_axes.k_siz = read_number(axes, "k_siz", "spherical_axes_k.k_siz", iso);

  if (doc.contains("compliance_model")) {
    const json& v = doc.at("compliance_model");
    if (v == "lumped") {
      c.compliance_model = ComplianceModel::lumped;
    } else if (v == "parametric") {
      c.compliance_model = ComplianceModel::parametric;
    } else {
      throw ConfigError("compliance_model", "expected \"lumped\" or \"parametric\"");
    }
  }
  if (doc.contains("parametric")) {
    const json& p = section(doc, "parametric");
    ParametricCompliance pc;
    pc.ea_leadscrew = require_number(p, "EA_leadscrew", "parametric.EA_leadscrew");
    pc.ea_link = require_number(p, "EA_link", "parametric.EA_link");
    pc.k_guiderail = require_number(p, "k_guiderail", "parametric.k_guiderail");
    pc.k_slider = require_number(p, "k_slider", "parametric.k_slider");
    pc.screw_length_offset =
        read_number(p, "screw_length_offset", "parametric.screw_length_offset", 0.0);
    c.parametric = pc;
  } else if (c.compliance_model == ComplianceModel::parametric) {
    throw ConfigError("parametric", "missing required parameter block for parametric model");
  }

  c.validate();
  return c;
}

}  // namespace

ManipulatorConfig ManipulatorConfig::defaults() { return ManipulatorConfig{}; }

void ManipulatorConfig::validate() const {
  require_positive(r_base, "r_base");
  require_positive(r_platform, "r_platform");
  require_positive(link_length, "link_length");
  if (limb_count != 3) throw ConfigError("limb_count", "only 3 limbs are supported");
  if (!(tilt_limit > 0.0 && tilt_limit < kPi / 2)) {
    throw ConfigError("tilt_limit", "must lie in (0, pi/2)");
  }
  if (!std::isfinite(heave)) throw ConfigError("heave", "must be finite");
  if (!(characteristic_length >= 0.0)) {
    throw ConfigError("characteristic_length", "must be >= 0 (0 disables scaling)");
  }
  require_positive(axial.k_carriage, "axial.k_carriage");
  require_positive(axial.k_revolute, "axial.k_revolute");
  require_positive(axial.k_limb_body, "axial.k_limb_body");
  require_positive(torsional.k_spherical, "torsional.k_spherical");
  require_positive(torsional.k_limb_body_t, "torsional.k_limb_body_t");
  require_positive(spherical_axes.k_six, "spherical_axes_k.k_six");
  require_positive(spherical_axes.k_siy, "spherical_axes_k.k_siy");
  require_positive(spherical_axes.k_siz, "spherical_axes_k.k_siz");
  if (compliance_model == ComplianceModel::parametric && !parametric) {
    throw ConfigError("parametric", "missing required parameter block for parametric model");
  }
  if (parametric) {
    require_positive(parametric->ea_leadscrew, "parametric.EA_leadscrew");
    require_positive(parametric->ea_link, "parametric.EA_link");
    require_positive(parametric->k_guiderail, "parametric.k_guiderail");
    require_positive(parametric->k_slider, "parametric.k_slider");
    if (!(parametric->screw_length_offset >= 0.0)) {
      throw ConfigError("parametric.screw_length_offset", "must be >= 0");
    }
  }
  if (!(link_length > std::abs(r_base - r_platform))) {
    throw GeometryError("link_length " + std::to_string(link_length) +
                        " m cannot span the radius difference |r_base - r_platform| = " +
                        std::to_string(std::abs(r_base - r_platform)) + " m");
  }
}

LimbFrames limb_frames(const ManipulatorConfig& config) {
  LimbFrames frames;
  for (int i = 0; i < 3; ++i) {
    LimbFrame& f = frames[i];
    f.index = i + 1;
    f.xi = i * 2.0 * kPi / 3.0;
    const double c = std::cos(f.xi);
    const double s = std::sin(f.xi);
    f.radial = Eigen::Vector3d(c, s, 0.0);
    f.b = config.r_base * f.radial;
    f.a_home = config.r_platform * f.radial;
    f.s1 = Eigen::Vector3d::UnitZ();
    f.s2 = Eigen::Vector3d(-s, c, 0.0);
  }
  return frames;
}

ManipulatorConfig load_config(std::string_view document, const std::vector<std::string>& overrides) {
  json doc = json::object();
  const bool blank = document.find_first_not_of(" \t\r\n") == std::string_view::npos;
  if (!blank) {
    try {
      doc = json::parse(document);
    } catch (const json::parse_error& e) {
      throw ConfigError("<document>", std::string("parse error: ") + e.what());
    }
  }
  for (const auto& o : overrides) apply_override(doc, o);
  return from_json(doc);
}

ManipulatorConfig load_config_file(const std::filesystem::path& path,
                                   const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), "cannot open config file");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return load_config(buffer.str(), overrides);
}

ManipulatorConfig load_default_config(const std::vector<std::string>& overrides) {
  return load_config("", overrides);
}

std::string serialize_config(const ManipulatorConfig& c) {
  nlohmann::ordered_json j;
  j["r_base"] = c.r_base;
  j["r_platform"] = c.r_platform;
  j["link_length"] = c.link_length;
  j["limb_count"] = c.limb_count;
  j["tilt_limit"] = c.tilt_limit;
  j["heave"] = c.heave;
  j["assembly_mode"] = to_string(c.assembly_mode);
  j["axial"] = {{"k_carriage", c.axial.k_carriage},
                {"k_revolute", c.axial.k_revolute},
                {"k_limb_body", c.axial.k_limb_body}};
  j["torsional"] = {{"k_spherical_per_rad", c.torsional.k_spherical},
                    {"k_limb_body_t_per_rad", c.torsional.k_limb_body_t}};
  j["spherical_axes_k"] = {{"k_six", c.spherical_axes.k_six},
                           {"k_siy", c.spherical_axes.k_siy},
                           {"k_siz", c.spherical_axes.k_siz}};
  j["compliance_model"] = to_string(c.compliance_model);
  if (c.parametric) {
    j["parametric"] = {{"EA_leadscrew", c.parametric->ea_leadscrew},
                       {"EA_link", c.parametric->ea_link},
                       {"k_guiderail", c.parametric->k_guiderail},
                       {"k_slider", c.parametric->k_slider},
                       {"screw_length_offset", c.parametric->screw_length_offset}};
  }
  j["characteristic_length"] = c.characteristic_length;
  return j.dump(2);
}

std::string to_string(ComplianceModel m) {
  return m == ComplianceModel::lumped ? "lumped" : "parametric";
}

std::string to_string(AssemblyMode m) {
  return m == AssemblyMode::elbow_below ? "elbow_below" : "elbow_above";
}

}  // namespace prs3
