#include "dslit/config.hpp"

#include "dslit/pgm.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <iterator>
#include <set>
#include <sstream>

namespace dslit {

namespace {

struct Unit {
  const char* suffix;
  double factor;
  Quantity kind;
};

constexpr Unit kUnits[] = {
    {"nm", 1e-9, Quantity::length}, {"um", 1e-6, Quantity::length}, {"mm", 1e-3, Quantity::length},
    {"cm", 1e-2, Quantity::length}, {"m", 1.0, Quantity::length},   {"eV", 1.0, Quantity::energy},
    {"keV", 1e3, Quantity::energy}, {"Hz", 1.0, Quantity::rate},    {"kHz", 1e3, Quantity::rate},
    {"s", 1.0, Quantity::time},     {"ms", 1e-3, Quantity::time},
};

const char* kind_name(Quantity kind) {
  switch (kind) {
  case Quantity::length: return "a length";
  case Quantity::energy: return "an energy";
  case Quantity::rate: return "a rate";
  case Quantity::time: return "a time";
  case Quantity::number: return "a plain number";
  }
  return "a value";
}

const char* si_suffix(Quantity kind) {
  switch (kind) {
  case Quantity::length: return " m";
  case Quantity::energy: return " eV";
  case Quantity::rate: return " Hz";
  case Quantity::time: return " s";
  case Quantity::number: return "";
  }
  return "";
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::uint64_t parse_unsigned(const std::string& text, const std::string& what) {
  std::uint64_t v = 0;
  const auto t = trim(text);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
    throw ConfigurationError(what + ": expected a non-negative integer, got '" + t + "'");
  return v;
}

bool parse_bool(const std::string& text, const std::string& what) {
  const auto t = trim(text);
  if (t == "true" || t == "yes" || t == "1") return true;
  if (t == "false" || t == "no" || t == "0") return false;
  throw ConfigurationError(what + ": expected true or false, got '" + t + "'");
}

std::vector<std::size_t> parse_list(const std::string& text, const std::string& what) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::size_t(parse_unsigned(item, what)));
  if (out.empty()) throw ConfigurationError(what + ": empty list");
  return out;
}

enum class Sign { any, positive, non_negative };

void check_sign(double v, Sign sign, const std::string& what) {
  if (sign == Sign::positive && !(v > 0.0)) throw ConfigurationError(what + " must be positive");
  if (sign == Sign::non_negative && !(v >= 0.0)) throw ConfigurationError(what + " must not be negative");
}

std::string shortest(double v) {
  char buffer[32];
  const auto r = std::to_chars(buffer, buffer + sizeof(buffer), v);
  return std::string(buffer, r.ptr);
}

std::string quantity_text(double v, Quantity kind) { return shortest(v) + si_suffix(kind); }

struct Key {
  std::string name;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

Key quantity_key(std::string name, Quantity kind, Sign sign, double RunConfig::*field) {
  return {std::move(name),
          [kind, sign, field](RunConfig& c, const std::string& v, const std::string& what) {
            const double x = parse_quantity(v, kind, what);
            check_sign(x, sign, what);
            c.*field = x;
          },
          [kind, field](const RunConfig& c) { return quantity_text(c.*field, kind); }};
}

template <typename Section>
Key section_quantity(std::string name, Quantity kind, Sign sign, Section RunConfig::*section,
                     double Section::*field) {
  return {std::move(name),
          [=](RunConfig& c, const std::string& v, const std::string& what) {
            const double x = parse_quantity(v, kind, what);
            check_sign(x, sign, what);
            c.*section.*field = x;
          },
          [=](const RunConfig& c) { return quantity_text(c.*section.*field, kind); }};
}

template <typename Section, typename Int>
Key section_integer(std::string name, bool positive, Section RunConfig::*section, Int Section::*field) {
  return {std::move(name),
          [=](RunConfig& c, const std::string& v, const std::string& what) {
            const auto x = parse_unsigned(v, what);
            if (positive && x == 0) throw ConfigurationError(what + " must be positive");
            c.*section.*field = Int(x);
          },
          [=](const RunConfig& c) { return std::to_string(c.*section.*field); }};
}

const std::vector<Key>& keys() {
  using Q = Quantity;
  static const std::vector<Key> table = {
      quantity_key("beam.energy", Q::energy, Sign::positive, &RunConfig::energy),
      quantity_key("layout.z_collimation_to_doubleslit", Q::length, Sign::positive,
                   &RunConfig::z_collimation_to_doubleslit),
      quantity_key("layout.z_doubleslit_to_mask", Q::length, Sign::positive, &RunConfig::z_doubleslit_to_mask),
      quantity_key("layout.z_mask_to_detector", Q::length, Sign::positive, &RunConfig::z_mask_to_detector),
      quantity_key("layout.magnification", Q::number, Sign::positive, &RunConfig::magnification),
      quantity_key("layout.collimation_width", Q::length, Sign::positive, &RunConfig::collimation_width),
      quantity_key("layout.slit_width", Q::length, Sign::positive, &RunConfig::slit_width),
      quantity_key("layout.slit_separation", Q::length, Sign::positive, &RunConfig::slit_separation),
      quantity_key("layout.slit_height", Q::length, Sign::positive, &RunConfig::slit_height),
      quantity_key("layout.mask_opening", Q::length, Sign::positive, &RunConfig::mask_opening),
      {"layout.illumination",
       [](RunConfig& c, const std::string& v, const std::string& what) {
         const auto t = trim(v);
         if (t == "plane_wave")
           c.illumination = Illumination::plane_wave;
         else if (t == "collimation_stage")
           c.illumination = Illumination::collimation_stage;
         else
           throw ConfigurationError(what + ": expected plane_wave or collimation_stage, got '" + t + "'");
       },
       [](const RunConfig& c) {
         return std::string(c.illumination == Illumination::plane_wave ? "plane_wave" : "collimation_stage");
       }},
      section_quantity("grid.window", Q::length, Sign::positive, &RunConfig::grid, &GridSpec::window),
      section_integer("grid.n", true, &RunConfig::grid, &GridSpec::n),
      section_quantity("grid.max_angle", Q::number, Sign::positive, &RunConfig::grid, &GridSpec::max_angle),
      section_quantity("sampler.total_rate", Q::rate, Sign::positive, &RunConfig::sampler, &SamplerConfig::total_rate),
      section_quantity("sampler.pattern_rate", Q::rate, Sign::positive, &RunConfig::sampler,
                       &SamplerConfig::pattern_rate),
      section_integer("sampler.events", true, &RunConfig::sampler, &SamplerConfig::events),
      {"sampler.seed",
       [](RunConfig& c, const std::string& v, const std::string& what) { c.sampler.seed = parse_unsigned(v, what); },
       [](const RunConfig& c) { return c.sampler.seed ? std::to_string(*c.sampler.seed) : std::string(); }},
      section_quantity("sampler.psf_sigma", Q::number, Sign::positive, &RunConfig::sampler, &SamplerConfig::psf_sigma),
      section_quantity("sampler.spot_amplitude", Q::number, Sign::positive, &RunConfig::sampler,
                       &SamplerConfig::spot_amplitude),
      section_quantity("sampler.background", Q::number, Sign::non_negative, &RunConfig::sampler,
                       &SamplerConfig::background),
      section_integer("sampler.frame_width", true, &RunConfig::sampler, &SamplerConfig::frame_width),
      section_integer("sampler.frame_height", true, &RunConfig::sampler, &SamplerConfig::frame_height),
      section_integer("sampler.frame_margin", false, &RunConfig::sampler, &SamplerConfig::frame_margin),
      section_quantity("sampler.zoom_orders", Q::number, Sign::positive, &RunConfig::sampler,
                       &SamplerConfig::zoom_orders),
      section_quantity("sampler.exposure", Q::time, Sign::non_negative, &RunConfig::sampler, &SamplerConfig::exposure),
      section_quantity("blob.t_min", Q::number, Sign::positive, &RunConfig::blob, &BlobConfig::t_min),
      section_quantity("blob.t_max", Q::number, Sign::positive, &RunConfig::blob, &BlobConfig::t_max),
      section_quantity("blob.ratio", Q::number, Sign::positive, &RunConfig::blob, &BlobConfig::ratio),
      {"blob.threshold",
       [](RunConfig& c, const std::string& v, const std::string& what) {
         if (trim(v) == "auto") {
           c.blob.threshold.reset();
           return;
         }
         const double x = parse_quantity(v, Quantity::number, what);
         check_sign(x, Sign::positive, what);
         c.blob.threshold = x;
       },
       [](const RunConfig& c) { return c.blob.threshold ? shortest(*c.blob.threshold) : std::string("auto"); }},
      section_quantity("blob.threshold_factor", Q::number, Sign::positive, &RunConfig::blob,
                       &BlobConfig::threshold_factor),
      section_quantity("blob.min_response", Q::number, Sign::non_negative, &RunConfig::blob,
                       &BlobConfig::min_response),
      {"outputs.directory",
       [](RunConfig& c, const std::string& v, const std::string& what) {
         if (trim(v).empty()) throw ConfigurationError(what + " must not be empty");
         c.outputs.directory = trim(v);
       },
       [](const RunConfig& c) { return c.outputs.directory; }},
      {"outputs.image",
       [](RunConfig& c, const std::string& v, const std::string& what) { c.outputs.image = parse_bool(v, what); },
       [](const RunConfig& c) { return std::string(c.outputs.image ? "true" : "false"); }},
      section_integer("outputs.frames", false, &RunConfig::outputs, &OutputConfig::frames),
      section_quantity("outputs.profile_range", Q::length, Sign::non_negative, &RunConfig::outputs,
                       &OutputConfig::profile_range),
      {"buildup.checkpoints",
       [](RunConfig& c, const std::string& v, const std::string& what) { c.checkpoints = parse_list(v, what); },
       [](const RunConfig& c) {
         std::string s;
         for (std::size_t i = 0; i < c.checkpoints.size(); ++i) s += (i ? ", " : "") + std::to_string(c.checkpoints[i]);
         return s;
       }},
      {"buildup.mask_center",
       [](RunConfig& c, const std::string& v, const std::string& what) {
         if (trim(v) == "none")
           c.buildup_mask_center.reset();
         else
           c.buildup_mask_center = parse_quantity(v, Quantity::length, what);
       },
       [](const RunConfig& c) {
         return c.buildup_mask_center ? quantity_text(*c.buildup_mask_center, Quantity::length) : std::string("none");
       }},
      {"run.threads",
       [](RunConfig& c, const std::string& v, const std::string& what) {
         const auto x = parse_unsigned(v, what);
         if (x == 0 || x > 256) throw ConfigurationError(what + " must be between 1 and 256");
         c.threads = unsigned(x);
       },
       [](const RunConfig& c) { return std::to_string(c.threads); }},
  };
  return table;
}

} // namespace

double parse_quantity(const std::string& text, Quantity kind, const std::string& what) {
  const auto t = trim(text);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (t.empty() || ec != std::errc()) throw ConfigurationError(what + ": expected a number, got '" + t + "'");
  const auto unit = trim(std::string(ptr, t.data() + t.size()));
  if (unit.empty()) return value;
  for (const auto& u : kUnits) {
    if (unit != u.suffix) continue;
    if (u.kind != kind) throw ConfigurationError(what + ": unit '" + unit + "' is not " + kind_name(kind));
    return value * u.factor;
  }
  throw ConfigurationError(what + ": unknown unit '" + unit + "'");
}

BeamlineLayout RunConfig::layout() const {
  BeamlineLayout l;
  l.z_collimation_to_doubleslit = z_collimation_to_doubleslit;
  l.z_doubleslit_to_mask = z_doubleslit_to_mask;
  l.z_mask_to_detector = z_mask_to_detector;
  l.magnification = magnification;
  l.collimation = ApertureSpec({{-collimation_width / 2, collimation_width / 2}});
  l.doubleslit = make_double_slit(slit_width, slit_separation);
  l.mask_opening_width = mask_opening;
  return l;
}

void RunConfig::validate() const {
  const auto fail = [](const std::string& m) { throw ConfigurationError(m); };
  if (!(slit_separation > slit_width)) fail("layout.slit_separation must exceed layout.slit_width");
  if (!is_power_of_two(grid.n) || grid.n < 8) fail("grid.n must be a power of two no smaller than 8");
  if (!(grid.max_angle < 1.0)) fail("grid.max_angle must be below 1 rad");
  if (!(sampler.pattern_rate <= sampler.total_rate)) fail("sampler.pattern_rate must not exceed sampler.total_rate");
  if (!sampler.seed) fail("sampler.seed is required (set it in the config or pass --seed)");
  if (2 * sampler.frame_margin >= sampler.frame_width) fail("sampler.frame_margin leaves no frame interior in x");
  if (2 * sampler.frame_margin >= sampler.frame_height) fail("sampler.frame_margin leaves no frame interior in y");
  if (!(blob.t_max >= blob.t_min)) fail("blob.t_max must not be below blob.t_min");
  if (!(blob.ratio > 1.0)) fail("blob.ratio must exceed 1");
  if (blob.scales().size() < 3) fail("blob.t_min, blob.t_max and blob.ratio give fewer than three scales");
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    if (checkpoints[i] == 0) fail("buildup.checkpoints must be positive");
    if (i > 0 && !(checkpoints[i] > checkpoints[i - 1])) fail("buildup.checkpoints must be strictly increasing");
  }
  try {
    layout().validate();
  } catch (const DomainError& e) {
    fail(e.what());
  }
}

RunConfig parse_config(const std::string& text, const std::string& origin) {
  RunConfig config;
  config.sampler.seed.reset();
  std::set<std::string> seen;
  std::stringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    const auto body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    const std::string where = origin + ":" + std::to_string(number);
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigurationError(where + ": expected 'section.key = value'");
    const auto key = trim(body.substr(0, eq));
    const auto value = trim(body.substr(eq + 1));
    const auto& table = keys();
    const auto it = std::find_if(table.begin(), table.end(), [&](const Key& k) { return k.name == key; });
    if (it == table.end()) throw ConfigurationError(where + ": unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigurationError(where + ": " + key + " is set twice");
    it->set(config, value, where + ": " + key);
  }
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream file(path);
  if (!file) throw IoError(path.string() + ": cannot open config");
  const std::string text((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
  return parse_config(text, path.string());
}

std::string to_config_text(const RunConfig& config) {
  std::string out;
  for (const auto& k : keys()) {
    const auto v = k.get(config);
    if (k.name == "sampler.seed" && v.empty()) continue;
    out += k.name + " = " + v + "\n";
  }
  return out;
}

const std::string& default_config_text() {
  static const std::string text = R"(# Double-slit build-up simulation, default run.

beam.energy = 600 eV

layout.z_collimation_to_doubleslit = 30.5 cm
layout.z_doubleslit_to_mask = 230 um
layout.z_mask_to_detector = 0.5 m   # assumed
layout.magnification = 10           # assumed
layout.collimation_width = 2 um
layout.slit_width = 50 nm
layout.slit_separation = 280 nm
layout.slit_height = 20 um          # assumed
layout.mask_opening = 5 um
layout.illumination = plane_wave

grid.window = 64 um
grid.n = 65536
grid.max_angle = 0.015

sampler.total_rate = 6.32 Hz
sampler.pattern_rate = 1 Hz
sampler.events = 6235
sampler.seed = 20130314
sampler.psf_sigma = 3
sampler.spot_amplitude = 1000
sampler.background = 0.05
sampler.frame_width = 256
sampler.frame_height = 48
sampler.frame_margin = 16
sampler.zoom_orders = 5
sampler.exposure = 0 s

blob.t_min = 2
blob.t_max = 30
blob.ratio = 1.3
blob.threshold = auto
blob.threshold_factor = 5
blob.min_response = 50

outputs.directory = out
outputs.image = true
outputs.frames = 100
outputs.profile_range = 20 mm

buildup.checkpoints = 2, 7, 209, 1004, 6235
buildup.mask_center = 0 um

run.threads = 1
)";
  return text;
}

} // namespace dslit
