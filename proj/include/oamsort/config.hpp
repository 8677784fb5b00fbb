#pragma once

// Run configuration: "key = value" lines grouped under [section] headers.
// '#' starts a comment. Every key has a default, a type and a provenance
// marker ("paper" when the value comes from the publication, "assumed"
// otherwise). Numeric keys may hold "auto", resolved from the grid later.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "oamsort/error.hpp"

namespace oamsort {

enum class ValueType { Int, Real, Bool, Text, IntList };

struct KeySpec {
  std::string section;
  std::string key;
  ValueType type;
  std::string default_value;
  std::string provenance;  // "paper" or "assumed"
  std::string help;
  bool allows_auto = false;
  std::vector<std::string> choices;  // Text keys only; empty means free text

  KeySpec(std::string section_, std::string key_, ValueType type_, std::string default_value_,
          std::string provenance_, std::string help_, bool allows_auto_ = false,
          std::vector<std::string> choices_ = {})
      : section(std::move(section_)), key(std::move(key_)), type(type_),
        default_value(std::move(default_value_)), provenance(std::move(provenance_)), help(std::move(help_)),
        allows_auto(allows_auto_), choices(std::move(choices_)) {}
};

inline const std::vector<KeySpec>& config_schema() {
  static const std::vector<KeySpec> schema = {
      {"grid", "nx", ValueType::Int, "1024", "assumed", "pixels along x (power of two)"},
      {"grid", "ny", ValueType::Int, "1024", "assumed", "pixels along y (power of two)"},
      {"grid", "dx", ValueType::Real, "7.79e-9", "assumed", "pixel pitch along x, m; puts r_max at 3.49 um"},
      {"grid", "dy", ValueType::Real, "7.79e-9", "assumed", "pixel pitch along y, m"},
      {"grid", "wavelength", ValueType::Real, "1.9687e-12", "assumed", "electron wavelength, m (300 kV)"},

      {"source", "kind", ValueType::Text, "vortex", "assumed", "source to build", false,
       {"gaussian", "vortex", "superposition", "mask", "dipole"}},
      {"source", "ell", ValueType::Int, "0", "assumed", "OAM of a vortex source"},
      {"source", "ells", ValueType::IntList, "-5,5", "paper", "equal-weight superposition terms"},
      {"source", "profile", ValueType::Text, "ring", "assumed", "radial profile of vortex, mask and dipole beams",
       false, {"ring", "gaussian"}},
      {"source", "ring_r0", ValueType::Real, "auto", "assumed", "ring radius, m (auto: r_max/2)", true},
      {"source", "ring_width", ValueType::Real, "auto", "assumed", "ring 1/e half-width, m (auto: r_max/4)", true},
      {"source", "w0", ValueType::Real, "auto", "assumed", "Gaussian waist, m (auto: r_max/2)", true},
      {"source", "mask_kind", ValueType::Text, "spiral", "paper", "generator mask type", false, {"spiral", "two-level"}},
      {"source", "mask_n", ValueType::Int, "1", "paper", "azimuthal period count n"},
      {"source", "mask_delta0", ValueType::Real, "6.283185307179586", "paper", "mask phase depth delta0, rad"},
      {"source", "mask_absorption", ValueType::Real, "0", "paper", "two-level mask absorption a"},

      {"sorter", "r_max", ValueType::Real, "auto", "assumed", "hologram cutoff radius, m (auto: 7/8 of half-extent)",
       true},
      {"sorter", "beam_radius", ValueType::Real, "auto", "assumed", "radius mapped to u = 0, m (auto: r_max/2)", true},
      {"sorter", "pixels_per_ell", ValueType::Real, "5", "assumed", "detector pixels per unit of OAM"},
      {"sorter", "detector_zoom", ValueType::Int, "4", "assumed", "corrector-plane zero padding along v"},
      {"sorter", "binarized", ValueType::Bool, "false", "assumed", "use two-level elements instead of kinoforms"},
      {"sorter", "phi0", ValueType::Real, "3.141592653589793", "paper", "unwrapper phase step, rad"},
      {"sorter", "phi1", ValueType::Real, "3.141592653589793", "paper", "corrector phase step, rad"},

      {"dipole", "moment", ValueType::Real, "6.2e9", "paper", "dipole moment, Bohr magnetons"},
      {"dipole", "chi_at_rmax", ValueType::Real, "auto", "paper",
       "when set, overrides moment so that chi(r_max) has this value, rad", true},
      {"dipole", "r_clamp", ValueType::Real, "auto", "assumed", "minimum radius for chi, m (auto: sampling limit)",
       true},
      {"dipole", "ring_r0", ValueType::Real, "auto", "assumed", "illumination ring radius for fig3, m (auto: 0.9 r_max)",
       true},
      {"dipole", "ring_width", ValueType::Real, "auto", "assumed", "illumination ring width for fig3, m (auto: 0.1 r_max)",
       true},

      {"detector", "poisson_counts", ValueType::Real, "0", "assumed", "expected total counts for shot noise (0: off)"},

      {"process", "background_poly_order", ValueType::Int, "3", "paper", "background polynomial degree"},
      {"process", "mem_iterations", ValueType::Int, "20000", "assumed", "MEM iteration cap"},
      {"process", "mem_tolerance", ValueType::Real, "1", "assumed", "MEM chi^2 per point target"},
      {"process", "mem_noise_floor", ValueType::Real, "2e-4", "assumed", "MEM noise floor, fraction of trace maximum"},
      {"process", "bin_offset_search", ValueType::Real, "0.5", "paper", "bin offset search half-range, ell units"},
      {"process", "clip_negatives", ValueType::Bool, "true", "paper", "clip negative counts before MEM"},
      {"process", "noise_model", ValueType::Text, "auto", "assumed",
       "MEM noise: uniform or poisson (auto: poisson when shot noise is on)", true, {"uniform", "poisson"}},
      {"process", "psf_half_width", ValueType::Real, "3", "assumed", "PSF extraction half-width, ell units"},
      {"process", "report_ell_max", ValueType::Int, "15", "assumed", "largest |ell| listed in summary spectra"},

      {"oracle", "n_rings", ValueType::Int, "auto", "assumed", "polar resampling rings (auto: nx/2)", true},
      {"oracle", "n_azimuth", ValueType::Int, "auto", "assumed", "polar resampling azimuths (auto: 4 nx)", true},

      {"run", "seed", ValueType::Int, "1", "assumed", "seed for shot noise"},
      {"run", "threads", ValueType::Int, "1", "assumed", "FFT threads"},
  };
  return schema;
}

class Config {
 public:
  static Config defaults() {
    Config c;
    for (const auto& k : config_schema()) c.values_[k.section + "." + k.key] = k.default_value;
    return c;
  }

  static Config parse(std::istream& in, const std::string& origin = "config") {
    Config c = defaults();
    std::string line, section;
    int number = 0;
    while (std::getline(in, line)) {
      ++number;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      const std::string where = origin + ":" + std::to_string(number) + ": ";
      if (line.front() == '[') {
        if (line.back() != ']') throw ConfigError(where + "malformed section header '" + line + "'");
        section = trim(line.substr(1, line.size() - 2));
        if (!known_section(section)) {
          throw ConfigError(where + "unknown section [" + section + "]; valid sections: " + section_list());
        }
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value', got '" + line + "'");
      if (section.empty()) throw ConfigError(where + "key outside any [section]");
      try {
        c.set(section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
      } catch (const ConfigError& e) {
        throw ConfigError(where + e.what());
      }
    }
    return c;
  }

  static Config load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path);
    return parse(in, path);
  }

  void set(const std::string& section, const std::string& key, const std::string& value) {
    const KeySpec& spec = find(section, key);
    check_value(spec, value);
    values_[section + "." + key] = value;
  }

  bool is_auto(const std::string& section, const std::string& key) const {
    return raw(section, key) == "auto";
  }

  std::string text(const std::string& section, const std::string& key) const { return raw(section, key); }

  double real(const std::string& section, const std::string& key) const {
    const std::string& v = raw(section, key);
    if (v == "auto") throw ConfigError(section + "." + key + " is 'auto' and has no numeric value");
    return std::stod(v);
  }

  /// Value, or fallback when the key is "auto".
  double real_or(const std::string& section, const std::string& key, double fallback) const {
    return is_auto(section, key) ? fallback : real(section, key);
  }

  long integer(const std::string& section, const std::string& key) const {
    const std::string& v = raw(section, key);
    if (v == "auto") throw ConfigError(section + "." + key + " is 'auto' and has no numeric value");
    return std::stol(v);
  }

  long integer_or(const std::string& section, const std::string& key, long fallback) const {
    return is_auto(section, key) ? fallback : integer(section, key);
  }

  bool boolean(const std::string& section, const std::string& key) const { return raw(section, key) == "true"; }

  std::vector<int> int_list(const std::string& section, const std::string& key) const {
    std::vector<int> out;
    std::stringstream ss(raw(section, key));
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stoi(trim(item)));
    return out;
  }

  /// Full configuration in the input format, one key per line with its
  /// provenance as a trailing comment. Parsing the result reproduces *this.
  std::string serialize() const {
    std::ostringstream o;
    std::string section;
    for (const auto& k : config_schema()) {
      if (k.section != section) {
        if (!section.empty()) o << "\n";
        section = k.section;
        o << "[" << section << "]\n";
      }
      o << k.key << " = " << raw(k.section, k.key) << "  # " << k.provenance << "; " << k.help << "\n";
    }
    return o.str();
  }

  bool operator==(const Config&) const = default;

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  static bool known_section(const std::string& section) {
    const auto& s = config_schema();
    return std::any_of(s.begin(), s.end(), [&](const KeySpec& k) { return k.section == section; });
  }

  static std::string section_list() {
    std::string out;
    std::string last;
    for (const auto& k : config_schema()) {
      if (k.section == last) continue;
      last = k.section;
      out += (out.empty() ? "" : ", ") + k.section;
    }
    return out;
  }

  static const KeySpec& find(const std::string& section, const std::string& key) {
    std::string valid;
    for (const auto& k : config_schema()) {
      if (k.section != section) continue;
      if (k.key == key) return k;
      valid += (valid.empty() ? "" : ", ") + k.key;
    }
    if (valid.empty()) throw ConfigError("unknown section [" + section + "]; valid sections: " + section_list());
    throw ConfigError("unknown key '" + key + "' in [" + section + "]; valid keys: " + valid);
  }

  static void check_value(const KeySpec& spec, const std::string& value) {
    const std::string name = spec.section + "." + spec.key;
    if (value == "auto") {
      if (!spec.allows_auto) throw ConfigError(name + " does not accept 'auto'");
      return;
    }
    auto parses = [&](auto parse) {
      try {
        std::size_t used = 0;
        parse(value, &used);
        return used == value.size();
      } catch (const std::exception&) {
        return false;
      }
    };
    switch (spec.type) {
      case ValueType::Int:
        if (!parses([](const std::string& s, std::size_t* u) { return std::stol(s, u); })) {
          throw ConfigError(name + " expects an integer, got '" + value + "'");
        }
        break;
      case ValueType::Real:
        if (!parses([](const std::string& s, std::size_t* u) { return std::stod(s, u); }) ||
            !std::isfinite(std::stod(value))) {
          throw ConfigError(name + " expects a finite number, got '" + value + "'");
        }
        break;
      case ValueType::Bool:
        if (value != "true" && value != "false") throw ConfigError(name + " expects true or false, got '" + value + "'");
        break;
      case ValueType::Text:
        if (!spec.choices.empty() &&
            std::find(spec.choices.begin(), spec.choices.end(), value) == spec.choices.end()) {
          std::string list;
          for (const auto& c : spec.choices) list += (list.empty() ? "" : ", ") + c;
          throw ConfigError(name + " must be one of: " + list + "; got '" + value + "'");
        }
        break;
      case ValueType::IntList: {
        std::stringstream ss(value);
        std::string item;
        int count = 0;
        while (std::getline(ss, item, ',')) {
          const std::string t = trim(item);
          bool ok = !t.empty() && t.find_first_not_of("+-0123456789") == std::string::npos;
          if (ok) {
            try {
              std::size_t used = 0;
              std::stoi(t, &used);
              ok = used == t.size();
            } catch (const std::exception&) {
              ok = false;
            }
          }
          if (!ok) {
            throw ConfigError(name + " expects comma-separated integers, got '" + value + "'");
          }
          ++count;
        }
        if (count == 0) throw ConfigError(name + " expects at least one integer");
        break;
      }
    }
  }

  const std::string& raw(const std::string& section, const std::string& key) const {
    find(section, key);
    return values_.at(section + "." + key);
  }

  std::map<std::string, std::string> values_;
};

}  // namespace oamsort
