#pragma once

// Batch driver: rir, simulate, extract, enhance, evaluate.
//
// Exit codes: 0 success, 1 unexpected failure, 2 usage or configuration
// error, 3 I/O error, 4 malformed file, 5 unsatisfiable scene constraint,
// 6 numeric failure (e.g. T60 not measurable).
//
// Relative output paths are resolved against $LSTSC_OUTPUT_ROOT when set.

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lstsc/lstsc.hpp"

namespace lstsc::cli {

using nlohmann::json;
namespace fs = std::filesystem;

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitUsage = 2,
  kExitIo = 3,
  kExitFormat = 4,
  kExitConstraint = 5,
  kExitNumeric = 6,
};

inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return kExitUsage;
    case ErrorKind::kIo: return kExitIo;
    case ErrorKind::kFormat: return kExitFormat;
    case ErrorKind::kConstraint: return kExitConstraint;
    case ErrorKind::kNumeric: return kExitNumeric;
  }
  return kExitFailure;
}

inline fs::path resolve_output(const std::string& path) {
  const fs::path p(path);
  if (p.is_absolute()) return p;
  if (const char* root = std::getenv("LSTSC_OUTPUT_ROOT"); root != nullptr && *root != '\0') {
    return fs::path(root) / p;
  }
  return p;
}

namespace detail {

using lstsc::detail::fail;

inline void ensure_parent(const fs::path& file) {
  const fs::path parent = file.parent_path();
  if (parent.empty()) return;
  std::error_code ec;
  fs::create_directories(parent, ec);
  if (ec) fail(ErrorKind::kIo, "cannot create directory " + parent.string());
}

inline void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) fail(ErrorKind::kIo, "cannot create directory " + dir.string());
}

inline json load_json(const fs::path& path) {
  const auto bytes = lstsc::detail::read_file(path);
  try {
    return json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    fail(ErrorKind::kInvalidArgument, "invalid JSON in " + path.string() + ": " + e.what());
  }
}

inline void write_json(const fs::path& path, const json& j) {
  ensure_parent(path);
  lstsc::detail::write_text(path, j.dump(2) + "\n");
}

inline void check_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                       const std::string& where) {
  if (!obj.is_object()) fail(ErrorKind::kInvalidArgument, where + " must be an object");
  for (const auto& item : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      fail(ErrorKind::kInvalidArgument, "unknown key '" + item.key() + "' in " + where);
    }
  }
}

template <class T>
T get(const json& obj, const char* key, T fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    fail(ErrorKind::kInvalidArgument, std::string("wrong type for '") + key + "' in " + where);
  }
}

inline Vec3 to_vec3(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) fail(ErrorKind::kInvalidArgument, where + " must be [x, y, z]");
  try {
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
  } catch (const json::exception&) {
    fail(ErrorKind::kInvalidArgument, where + " must hold numbers");
  }
}

inline json from_vec3(Vec3 v) { return json::array({v.x, v.y, v.z}); }

template <std::size_t N>
bool on_grid(double v, const std::array<double, N>& grid) {
  return std::find(grid.begin(), grid.end(), v) != grid.end();
}

inline SourceRole parse_role(const std::string& s) {
  for (SourceRole r : kAllRoles) {
    if (s == to_string(r)) return r;
  }
  fail(ErrorKind::kInvalidArgument, "unknown source role '" + s + "'");
}

inline std::string_view to_string(AbsorptionModel m) {
  switch (m) {
    case AbsorptionModel::kImageDecay: return "image-decay";
    case AbsorptionModel::kSabine: return "sabine";
    case AbsorptionModel::kEyring: return "eyring";
  }
  return "unknown";
}

inline AbsorptionModel parse_absorption(const std::string& s) {
  for (auto m : {AbsorptionModel::kImageDecay, AbsorptionModel::kSabine, AbsorptionModel::kEyring}) {
    if (s == to_string(m)) return m;
  }
  fail(ErrorKind::kInvalidArgument, "unknown absorption model '" + s + "'");
}

}  // namespace detail

// ---- configuration ----------------------------------------------------------

struct ArraySettings {
  std::string preset = "ula";
  int channels = 4;
  double spacing = 0.08;
  double diameter = 0.08;
  std::vector<Vec3> positions;

  ArrayGeometry build() const {
    if (preset == "ula") return ArrayGeometry::ula(channels, spacing);
    if (preset == "circular") return ArrayGeometry::circular(channels, diameter, true);
    if (preset == "custom") return ArrayGeometry::custom(positions);
    lstsc::detail::fail(ErrorKind::kInvalidArgument, "unknown array preset '" + preset + "'");
  }
};

struct SceneSettings {
  Vec3 room{6.0, 5.0, 3.0};
  AbsorptionModel absorption = AbsorptionModel::kImageDecay;
  Vec3 array_center{3.0, 1.5, 1.2};
  ArraySettings array;
  std::string split = "train";
  std::vector<double> t60_grid;  // empty: the split's grid
  std::optional<double> t60;     // fixed T60, overrides the grid
  double min_range = 0.7;
  double max_range = 2.0;
  double min_separation_deg = 15.0;
  std::vector<Source> sources;   // fixed layout, overrides sampling
  bool allow_off_grid = false;
};

struct MixSettings {
  std::optional<double> sir_db;  // empty: drawn from the grid per seed
  std::optional<double> snr_db;
  double clip_seconds = 8.0;
};

struct CoherenceSettings {
  Variant variant = Variant::kLstsc3;
  int context = 1;
  double beta = 0.01;
  double epsilon = 1e-12;
  std::string estimator = "heuristic";  // heuristic | zero | unit | oracle

  CoherenceConfig build() const {
    CoherenceConfig cfg = CoherenceConfig::for_variant(variant);
    cfg.context = context;
    cfg.beta = beta;
    cfg.epsilon = epsilon;
    cfg.validate();
    return cfg;
  }
};

struct RunConfig {
  SceneSettings scene;
  MixSettings mix;
  CoherenceSettings coherence;
  std::map<SourceRole, std::string> stems;  // recorded dry stems; synthesized otherwise
  std::optional<std::uint64_t> seed;
};

inline ArraySettings parse_array(const json& j) {
  using namespace detail;
  check_keys(j, {"preset", "channels", "spacing", "diameter", "positions"}, "scene.array");
  ArraySettings a;
  a.preset = get<std::string>(j, "preset", a.preset, "scene.array");
  a.channels = get<int>(j, "channels", a.preset == "circular" ? 7 : 4, "scene.array");
  a.spacing = get<double>(j, "spacing", a.spacing, "scene.array");
  a.diameter = get<double>(j, "diameter", a.diameter, "scene.array");
  if (j.contains("positions")) {
    if (!j["positions"].is_array()) fail(ErrorKind::kInvalidArgument, "scene.array.positions must be a list");
    for (const auto& p : j["positions"]) a.positions.push_back(to_vec3(p, "scene.array.positions[]"));
  }
  if (a.preset == "custom" && a.positions.empty()) {
    fail(ErrorKind::kInvalidArgument, "custom array needs positions");
  }
  if (a.preset != "ula" && a.preset != "circular" && a.preset != "custom") {
    fail(ErrorKind::kInvalidArgument, "unknown array preset '" + a.preset + "'");
  }
  return a;
}

inline SceneSettings parse_scene(const json& j) {
  using namespace detail;
  check_keys(j, {"room", "absorption", "array_center", "array", "split", "t60_grid", "t60",
                 "min_range", "max_range", "min_separation_deg", "sources", "allow_off_grid"},
             "scene");
  SceneSettings s;
  if (j.contains("room")) s.room = to_vec3(j["room"], "scene.room");
  if (j.contains("absorption")) s.absorption = parse_absorption(get<std::string>(j, "absorption", "", "scene"));
  if (j.contains("array_center")) s.array_center = to_vec3(j["array_center"], "scene.array_center");
  if (j.contains("array")) s.array = parse_array(j["array"]);
  s.split = get<std::string>(j, "split", s.split, "scene");
  if (s.split != "train" && s.split != "test") {
    fail(ErrorKind::kInvalidArgument, "scene.split must be 'train' or 'test'");
  }
  s.allow_off_grid = get<bool>(j, "allow_off_grid", false, "scene");
  s.t60_grid = get<std::vector<double>>(j, "t60_grid", {}, "scene");
  if (j.contains("t60")) s.t60 = get<double>(j, "t60", 0.0, "scene");
  s.min_range = get<double>(j, "min_range", s.min_range, "scene");
  s.max_range = get<double>(j, "max_range", s.max_range, "scene");
  s.min_separation_deg = get<double>(j, "min_separation_deg", s.min_separation_deg, "scene");
  if (j.contains("sources")) {
    if (!j["sources"].is_array()) fail(ErrorKind::kInvalidArgument, "scene.sources must be a list");
    for (const auto& src : j["sources"]) {
      check_keys(src, {"role", "position"}, "scene.sources[]");
      if (!src.contains("role") || !src.contains("position")) {
        fail(ErrorKind::kInvalidArgument, "scene.sources[] needs role and position");
      }
      s.sources.push_back({to_vec3(src["position"], "scene.sources[].position"),
                           parse_role(get<std::string>(src, "role", "", "scene.sources[]"))});
    }
  }

  std::vector<double> t60s = s.t60_grid;
  if (s.t60) t60s.push_back(*s.t60);
  for (double t : t60s) {
    if (!(t > 0.0)) fail(ErrorKind::kInvalidArgument, "T60 values must be positive");
    const bool ok = on_grid(t, MixSpec::kTrainT60Grid) || on_grid(t, MixSpec::kTestT60Grid);
    if (!ok && !s.allow_off_grid) {
      fail(ErrorKind::kInvalidArgument,
           "T60 " + std::to_string(t) + " is not on the train or test grid (set allow_off_grid)");
    }
  }
  return s;
}

inline MixSettings parse_mix(const json& j, bool allow_off_grid) {
  using namespace detail;
  check_keys(j, {"sir_db", "snr_db", "clip_seconds"}, "mix");
  MixSettings m;
  if (j.contains("sir_db")) m.sir_db = get<double>(j, "sir_db", 0.0, "mix");
  if (j.contains("snr_db")) m.snr_db = get<double>(j, "snr_db", 0.0, "mix");
  m.clip_seconds = get<double>(j, "clip_seconds", m.clip_seconds, "mix");
  if (!(m.clip_seconds > 0.0)) fail(ErrorKind::kInvalidArgument, "mix.clip_seconds must be positive");
  if (m.sir_db && !on_grid(*m.sir_db, MixSpec::kSirGrid) && !allow_off_grid) {
    fail(ErrorKind::kInvalidArgument, "mix.sir_db must be one of 0, 5, 10, 15");
  }
  if (m.snr_db && !on_grid(*m.snr_db, MixSpec::kSnrGrid) && !allow_off_grid) {
    fail(ErrorKind::kInvalidArgument, "mix.snr_db must be one of 20, 25, 30");
  }
  return m;
}

inline CoherenceSettings parse_coherence(const json& j) {
  using namespace detail;
  check_keys(j, {"variant", "context", "beta", "epsilon", "estimator"}, "coherence");
  CoherenceSettings c;
  if (j.contains("variant")) c.variant = parse_variant(get<std::string>(j, "variant", "", "coherence"));
  c.context = get<int>(j, "context", c.context, "coherence");
  c.beta = get<double>(j, "beta", c.beta, "coherence");
  c.epsilon = get<double>(j, "epsilon", c.epsilon, "coherence");
  c.estimator = get<std::string>(j, "estimator", c.estimator, "coherence");
  const std::array<std::string_view, 4> known{"heuristic", "zero", "unit", "oracle"};
  if (std::find(known.begin(), known.end(), c.estimator) == known.end()) {
    fail(ErrorKind::kInvalidArgument, "unknown estimator '" + c.estimator + "'");
  }
  c.build();
  return c;
}

inline RunConfig parse_config(const json& root) {
  using namespace detail;
  // A simulate manifest is accepted as a config: its "config" section holds
  // the fully resolved settings.
  const json& j = root.contains("config") && root.contains("realized") ? root["config"] : root;
  check_keys(j, {"scene", "mix", "coherence", "stems", "seed"}, "config");
  RunConfig cfg;
  if (j.contains("scene")) cfg.scene = parse_scene(j["scene"]);
  if (j.contains("mix")) cfg.mix = parse_mix(j["mix"], cfg.scene.allow_off_grid);
  if (j.contains("coherence")) cfg.coherence = parse_coherence(j["coherence"]);
  if (j.contains("stems")) {
    check_keys(j["stems"], {"target", "non_target", "interferer"}, "stems");
    for (const auto& item : j["stems"].items()) {
      cfg.stems[parse_role(item.key())] = get<std::string>(j["stems"], item.key().c_str(), "", "stems");
    }
  }
  if (j.contains("seed")) cfg.seed = get<std::uint64_t>(j, "seed", 0, "config");
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  if (path.empty()) return {};
  return parse_config(detail::load_json(path));
}

// ---- scene construction -----------------------------------------------------

struct BuiltScene {
  RoomScene scene;
  MixSpec spec;
  std::uint64_t seed = 0;
  std::uint64_t stem_seed = 0;
};

inline BuiltScene build_scene(const RunConfig& cfg, std::uint64_t seed) {
  const SceneSettings& s = cfg.scene;
  BuiltScene out;
  out.seed = seed;
  out.stem_seed = seed * 0x9E3779B97F4A7C15ULL + 1;
  const ArrayGeometry array = s.array.build();

  SceneConstraints cons;
  cons.room = Room{s.room, 0.3, s.absorption};
  cons.array_center = s.array_center;
  cons.min_range = s.min_range;
  cons.max_range = s.max_range;
  cons.min_separation_deg = s.min_separation_deg;
  if (s.t60) {
    cons.t60_grid = {*s.t60};
  } else if (!s.t60_grid.empty()) {
    cons.t60_grid = s.t60_grid;
  } else if (s.split == "test") {
    cons.t60_grid.assign(MixSpec::kTestT60Grid.begin(), MixSpec::kTestT60Grid.end());
  } else {
    cons.t60_grid.assign(MixSpec::kTrainT60Grid.begin(), MixSpec::kTrainT60Grid.end());
  }

  if (s.sources.empty()) {
    out.scene = sample_scene(seed, array, cons);
  } else {
    std::mt19937_64 rng(seed);
    out.scene.room = cons.room;
    out.scene.room.t60 = cons.t60_grid[static_cast<std::size_t>(
        lstsc::detail::uniform01(rng) * cons.t60_grid.size())];
    out.scene.array_center = s.array_center;
    out.scene.array = array;
    out.scene.sources = s.sources;
  }
  validate_scene(out.scene, s.min_range, s.max_range, s.min_separation_deg);

  std::mt19937_64 level_rng(seed ^ 0xA5A5A5A5DEADBEEFULL);
  const auto pick = [&](const auto& grid) {
    return grid[static_cast<std::size_t>(lstsc::detail::uniform01(level_rng) * grid.size())];
  };
  const double sir = pick(MixSpec::kSirGrid);
  const double snr = pick(MixSpec::kSnrGrid);
  out.spec.sir_db = cfg.mix.sir_db.value_or(sir);
  out.spec.snr_db = cfg.mix.snr_db.value_or(snr);
  out.spec.clip_seconds = cfg.mix.clip_seconds;
  out.spec.noise_seed = seed;
  return out;
}

inline Stems build_stems(const RunConfig& cfg, const BuiltScene& built, int fs) {
  const auto samples = static_cast<std::size_t>(std::llround(built.spec.clip_seconds * fs));
  Stems stems;
  if (cfg.stems.size() < kAllRoles.size()) {
    stems = synth_conversation(built.stem_seed, samples, fs).stems;
  }
  for (const auto& [role, path] : cfg.stems) {
    const MultichannelAudio a = load_wav(path);
    require_pipeline_rate(a);
    const auto ch = a.channel(0);
    std::vector<double> v(ch.begin(), ch.end());
    switch (role) {
      case SourceRole::kTarget: stems.target = std::move(v); break;
      case SourceRole::kNonTarget: stems.non_target = std::move(v); break;
      case SourceRole::kInterferer: stems.interferer = std::move(v); break;
    }
  }
  return stems;
}

inline std::string rir_file_name(SourceRole role, int mic) {
  return "rir_" + std::string(to_string(role)) + "_m" + std::to_string(mic) + ".wav";
}

inline RirSet load_rir_dir(const fs::path& dir, int mics) {
  RirSet set;
  for (SourceRole role : kAllRoles) {
    for (int m = 0; m < mics; ++m) {
      const MultichannelAudio a = load_wav(dir / rir_file_name(role, m));
      Rir r;
      r.sample_rate = a.sample_rate();
      r.taps.assign(a.channel(0).begin(), a.channel(0).end());
      set[role].push_back(std::move(r));
    }
  }
  return set;
}

inline json scene_json(const BuiltScene& b, const RunConfig& cfg) {
  using detail::from_vec3;
  json scene;
  scene["room"] = from_vec3(b.scene.room.dims);
  scene["absorption"] = std::string(detail::to_string(b.scene.room.absorption));
  scene["t60"] = b.scene.room.t60;
  scene["allow_off_grid"] = true;  // the layout below is already resolved
  scene["array_center"] = from_vec3(b.scene.array_center);
  json positions = json::array();
  for (const auto& o : b.scene.array.offsets) positions.push_back(from_vec3(o));
  scene["array"] = {{"preset", "custom"}, {"positions", positions}};
  scene["min_range"] = cfg.scene.min_range;
  scene["max_range"] = cfg.scene.max_range;
  scene["min_separation_deg"] = cfg.scene.min_separation_deg;
  json sources = json::array();
  for (const auto& s : b.scene.sources) {
    sources.push_back({{"role", std::string(to_string(s.role))}, {"position", from_vec3(s.position)}});
  }
  scene["sources"] = sources;
  return scene;
}

// ---- estimators -------------------------------------------------------------

inline std::unique_ptr<MaskEstimator> make_estimator(const std::string& name,
                                                     const std::string& oracle_target) {
  if (name == "heuristic") return std::make_unique<HeuristicMaskEstimator>();
  if (name == "zero") return std::make_unique<ConstantMaskEstimator>(0.0);
  if (name == "unit") return std::make_unique<ConstantMaskEstimator>(1.0);
  if (name == "oracle") {
    if (oracle_target.empty()) {
      lstsc::detail::fail(ErrorKind::kInvalidArgument, "oracle estimator needs --target");
    }
    const MultichannelAudio t = load_wav(oracle_target);
    return std::make_unique<OracleMaskEstimator>(stft(t.channel(0)));
  }
  lstsc::detail::fail(ErrorKind::kInvalidArgument, "unknown estimator '" + name + "'");
}

// ---- subcommands ------------------------------------------------------------

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string in;
  std::string variant;
  std::string estimator;
  std::string target;
  std::string csv;
  std::string mask_out;
  std::string rir_dir;
  std::string reference;
  std::vector<std::string> estimates;
  std::string mixture;
  std::string label;
  std::optional<double> t60;
};

inline std::uint64_t resolve_seed(const Options& o, const RunConfig& cfg) {
  return o.seed.value_or(cfg.seed.value_or(0));
}

inline CoherenceSettings resolve_coherence(const Options& o, const RunConfig& cfg) {
  CoherenceSettings c = cfg.coherence;
  if (!o.variant.empty()) c.variant = parse_variant(o.variant);
  if (!o.estimator.empty()) c.estimator = o.estimator;
  c.build();
  return c;
}

inline int cmd_rir(const Options& o, std::ostream& out) {
  RunConfig cfg = load_config(o.config);
  if (o.t60) {
    cfg.scene.t60 = *o.t60;
    cfg.scene.allow_off_grid = true;
  }
  const BuiltScene b = build_scene(cfg, resolve_seed(o, cfg));
  const fs::path dir = resolve_output(o.out);
  detail::ensure_dir(dir);
  const auto mics = b.scene.mic_positions();
  json measured = json::array();
  for (const auto& s : b.scene.sources) {
    for (std::size_t m = 0; m < mics.size(); ++m) {
      const Rir rir = simulate_rir(b.scene.room, s.position, mics[m], kPipelineSampleRate);
      save_wav(dir / rir_file_name(s.role, static_cast<int>(m)),
               MultichannelAudio(rir.sample_rate, {rir.taps}));
      json entry{{"role", std::string(to_string(s.role))},
                 {"mic", m},
                 {"distance", rir.source_distance},
                 {"direct_delay", direct_path_delay(s.position, mics[m], rir.sample_rate)}};
      if (b.scene.room.t60 > 0.0) entry["measured_t60"] = measure_t60(rir);
      measured.push_back(entry);
    }
  }
  json manifest{{"config", {{"scene", scene_json(b, cfg)}, {"seed", b.seed}}},
                {"realized", {{"rirs", measured}, {"reflection_coefficient",
                                                   reflection_coefficient(b.scene.room)}}}};
  detail::write_json(dir / "scene.json", manifest);
  out << "wrote " << measured.size() << " impulse responses to " << dir.string() << "\n";
  return kExitOk;
}

inline int cmd_simulate(const Options& o, std::ostream& out) {
  const RunConfig cfg = load_config(o.config);
  const BuiltScene b = build_scene(cfg, resolve_seed(o, cfg));
  const Stems stems = build_stems(cfg, b, kPipelineSampleRate);
  std::optional<RirSet> rirs;
  if (!o.rir_dir.empty()) rirs = load_rir_dir(o.rir_dir, b.scene.array.channels());
  const MixResult mix = mix_scene(b.scene, stems, b.spec, rirs);

  const fs::path dir = resolve_output(o.out);
  detail::ensure_dir(dir);
  save_wav(dir / "mixture.wav", mix.mixture);
  for (SourceRole role : kAllRoles) {
    save_wav(dir / (std::string(to_string(role)) + ".wav"), mix.images.at(role));
  }

  json config{{"scene", scene_json(b, cfg)},
              {"mix", {{"sir_db", b.spec.sir_db}, {"snr_db", b.spec.snr_db},
                       {"clip_seconds", b.spec.clip_seconds}}},
              {"seed", b.seed}};
  if (!cfg.stems.empty()) {
    json stems_json;
    for (const auto& [role, path] : cfg.stems) stems_json[std::string(to_string(role))] = path;
    config["stems"] = stems_json;
  }
  json gains;
  for (const auto& [role, g] : mix.gains) gains[std::string(to_string(role))] = g;
  json realized{{"gains", gains},
                {"noise_gain", mix.noise_gain},
                {"sir_db", mix.realized_sir_db},
                {"snr_db", mix.realized_snr_db},
                {"stem_seed", b.stem_seed},
                {"noise_seed", b.spec.noise_seed},
                {"reflection_coefficient", rirs ? json(nullptr) : json(reflection_coefficient(b.scene.room))},
                {"external_rirs", o.rir_dir.empty() ? json(nullptr) : json(o.rir_dir)},
                {"sample_rate", kPipelineSampleRate},
                {"frames", mix.mixture.frames()},
                {"files", {"mixture.wav", "target.wav", "non_target.wav", "interferer.wav"}}};
  detail::write_json(dir / "scene.json", json{{"config", config}, {"realized", realized}});
  out << "simulated scene (seed " << b.seed << ", T60 " << b.scene.room.t60 << " s, SIR "
      << b.spec.sir_db << " dB, SNR " << b.spec.snr_db << " dB) into " << dir.string() << "\n";
  return kExitOk;
}

inline fs::path with_suffix(const fs::path& p, const std::string& suffix) {
  fs::path q = p;
  q.replace_extension(suffix);
  return q;
}

inline int cmd_extract(const Options& o, std::ostream& out) {
  const RunConfig cfg = load_config(o.config);
  const CoherenceSettings cs = resolve_coherence(o, cfg);
  const MultichannelAudio mix = load_wav(o.in);
  const auto est = make_estimator(cs.estimator, o.target);
  const EnhanceResult res = enhance_stream(mix, cs.build(), *est);
  const LstscFeatures& feat = res.banded ? *res.banded : res.features;

  const fs::path path = resolve_output(o.out);
  detail::ensure_parent(path);
  write_lsts(path, to_feature_file(feat));
  const fs::path csv = o.csv.empty() ? with_suffix(path, ".csv") : resolve_output(o.csv);
  detail::ensure_parent(csv);
  write_features_csv(csv, feat);
  if (res.banded) {
    lstsc::detail::write_text(with_suffix(path, ".bands.csv"),
                              filterbank_csv(ErbFilterbank(mix.sample_rate(), StftConfig{}.fft_size)));
  }
  out << "features " << feat.frames << " x " << feat.bins << " (" << to_string(cs.variant)
      << ", warm-up " << feat.warmup_frames << " frames) -> " << path.string() << "\n";
  return kExitOk;
}

inline int cmd_enhance(const Options& o, std::ostream& out) {
  const RunConfig cfg = load_config(o.config);
  const CoherenceSettings cs = resolve_coherence(o, cfg);
  const MultichannelAudio mix = load_wav(o.in);
  const auto est = make_estimator(cs.estimator, o.target);
  const EnhanceResult res = enhance_stream(mix, cs.build(), *est);

  const fs::path path = resolve_output(o.out);
  detail::ensure_parent(path);
  save_wav(path, res.enhanced);
  const fs::path mask_path =
      o.mask_out.empty() ? with_suffix(path, ".mask.lsts") : resolve_output(o.mask_out);
  detail::ensure_parent(mask_path);
  write_lsts(mask_path, to_feature_file(res.mask));
  detail::write_json(with_suffix(path, ".json"),
                     json{{"input", o.in},
                          {"variant", std::string(to_string(cs.variant))},
                          {"estimator", cs.estimator},
                          {"context", cs.context},
                          {"frames", res.mask.frames()},
                          {"warmup_frames", res.warmup_frames},
                          {"lookahead_frames", cs.context}});
  out << "enhanced " << mix.frames() << " samples -> " << path.string() << " (mask "
      << mask_path.string() << ")\n";
  return kExitOk;
}

inline int cmd_evaluate(const Options& o, std::ostream& out) {
  const MultichannelAudio ref = load_wav(o.reference);
  const auto ref0 = ref.channel(0);
  const fs::path path = resolve_output(o.out);
  detail::ensure_parent(path);
  std::ofstream report(path, std::ios::app);
  if (!report) lstsc::detail::fail(ErrorKind::kIo, "cannot write " + path.string());

  std::optional<double> input_db;
  if (!o.mixture.empty()) {
    const MultichannelAudio mix = load_wav(o.mixture);
    input_db = si_sdr(ref0, mix.channel(0)).value_db;
  }
  for (const auto& e : o.estimates) {
    const MultichannelAudio est = load_wav(e);
    const SiSdrReport r = si_sdr(ref0, est.channel(0));
    json line{{"reference", o.reference}, {"estimate", e}, {"si_sdr_db", r.value_db},
              {"projection_gain", r.projection_gain}, {"samples", ref.frames()}};
    if (input_db) {
      line["input_si_sdr_db"] = *input_db;
      line["si_sdr_improvement_db"] = r.value_db - *input_db;
    }
    if (!o.label.empty()) line["label"] = o.label;
    report << line.dump() << "\n";
    out << e << ": SI-SDR " << r.value_db << " dB\n";
  }
  if (!report) lstsc::detail::fail(ErrorKind::kIo, "write failed for " + path.string());
  return kExitOk;
}

// ---- entry point ------------------------------------------------------------

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Long-short-term spatial coherence features, scenes and enhancement", "lstsc"};
  app.require_subcommand(1);
  Options o;

  auto* rir = app.add_subcommand("rir", "Write image-source RIRs for a sampled scene");
  rir->add_option("--config", o.config, "JSON config");
  rir->add_option("--seed", o.seed, "Scene seed");
  rir->add_option("--t60", o.t60, "Fixed T60 in seconds");
  rir->add_option("--out", o.out, "Output directory")->required();

  auto* sim = app.add_subcommand("simulate", "Render a mixture, source images and a manifest");
  sim->add_option("--config", o.config, "JSON config or a previous scene.json");
  sim->add_option("--seed", o.seed, "Scene seed");
  sim->add_option("--rir-dir", o.rir_dir, "Directory of rir_<role>_m<k>.wav to use instead of simulation");
  sim->add_option("--out", o.out, "Output directory")->required();

  auto* ext = app.add_subcommand("extract", "Compute LSTSC features of a multichannel WAV");
  auto* enh = app.add_subcommand("enhance", "Mask the reference channel using LSTSC features");
  for (auto* sub : {ext, enh}) {
    sub->add_option("--config", o.config, "JSON config");
    sub->add_option("--variant", o.variant, "lstsc-1 .. lstsc-4");
    sub->add_option("--estimator", o.estimator, "heuristic, zero, unit or oracle");
    sub->add_option("--target", o.target, "Target image WAV for the oracle estimator");
    sub->add_option("--in", o.in, "Input multichannel WAV")->required();
    sub->add_option("--out", o.out, "Output file")->required();
  }
  ext->add_option("--csv", o.csv, "CSV export path (default: <out>.csv)");
  enh->add_option("--mask-out", o.mask_out, "Mask dump path (default: <out>.mask.lsts)");

  auto* ev = app.add_subcommand("evaluate", "Append SI-SDR results to a JSON-lines report");
  ev->add_option("--reference", o.reference, "Reference WAV (channel 0 is used)")->required();
  ev->add_option("--estimate", o.estimates, "Estimate WAV(s)")->required();
  ev->add_option("--mixture", o.mixture, "Unprocessed mixture, for the improvement figure");
  ev->add_option("--label", o.label, "Free-form tag stored with each line");
  ev->add_option("--out", o.out, "Report path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*rir) return cmd_rir(o, out);
    if (*sim) return cmd_simulate(o, out);
    if (*ext) return cmd_extract(o, out);
    if (*enh) return cmd_enhance(o, out);
    if (*ev) return cmd_evaluate(o, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace lstsc::cli
