#ifndef MIMO_RADAR_CONFIG_HPP
#define MIMO_RADAR_CONFIG_HPP

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "mimo_radar/experiments.hpp"

namespace mimo_radar {

using Json = nlohmann::json;

namespace detail {

inline void reject_unknown(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key())) throw ConfigError(where + ": unknown key '" + it.key() + "'");
}

template <class T>
T get_or(const Json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: bad value for '") + key + "': " + e.what());
    }
}

inline Vec3 to_vec3(const Json& j, double scale, const std::string& what) {
    if (!j.is_array() || j.size() != 3) throw ConfigError(what + ": expected a 3-element array");
    Vec3 v;
    for (int i = 0; i < 3; ++i) {
        if (!j[static_cast<std::size_t>(i)].is_number()) throw ConfigError(what + ": coordinates must be numbers");
        v(i) = j[static_cast<std::size_t>(i)].get<double>() * scale;
    }
    return v;
}

inline Json from_vec3(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

inline double unit_scale(const Json& j) {
    const std::string units = get_or<std::string>(j, "units", "km");
    if (units == "km") return 1000.0;
    if (units == "m") return 1.0;
    throw ConfigError("config: units must be 'km' or 'm', got '" + units + "'");
}

// Either an explicit list or {"start", "stop", "step"} (inclusive, ascending).
inline std::vector<double> range_or_list(const Json& j, const std::string& what) {
    if (j.is_array()) {
        std::vector<double> v;
        for (const auto& x : j) {
            if (!x.is_number()) throw ConfigError(what + ": entries must be numbers");
            v.push_back(x.get<double>());
        }
        return v;
    }
    if (j.is_object() && j.contains("start")) {
        reject_unknown(j, {"start", "stop", "step"}, what);
        const double a = j.at("start").get<double>(), b = j.at("stop").get<double>(), s = j.at("step").get<double>();
        if (!(s > 0.0) || b < a) throw ConfigError(what + ": need step > 0 and stop >= start");
        std::vector<double> v;
        const auto n = static_cast<std::size_t>(std::floor((b - a) / s + 1e-9));
        for (std::size_t i = 0; i <= n; ++i) v.push_back(a + s * static_cast<double>(i));
        return v;
    }
    if (j.is_object() && j.contains("log10_start")) {
        reject_unknown(j, {"log10_start", "log10_stop", "count"}, what);
        const double a = j.at("log10_start").get<double>(), b = j.at("log10_stop").get<double>();
        const auto n = j.at("count").get<std::size_t>();
        if (n < 2 || b <= a) throw ConfigError(what + ": need count >= 2 and log10_stop > log10_start");
        std::vector<double> v;
        for (std::size_t i = 0; i < n; ++i)
            v.push_back(std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1)));
        return v;
    }
    throw ConfigError(what + ": expected a list or a range object");
}

inline SceneConfig scene_from_json(const Json& j) {
    reject_unknown(j, {"units", "preset", "nt", "nr", "spacing_m", "tx", "rx", "target", "carrier_hz", "path_loss_exp",
                       "c", "num_scatterers"},
                   "scene");
    const double scale = unit_scale(j);
    SceneConfig s;
    if (j.contains("preset")) {
        const std::string preset = j.at("preset").get<std::string>();
        const auto nt = get_or<std::size_t>(j, "nt", 2), nr = get_or<std::size_t>(j, "nr", 2);
        if (preset == "mimo") s = reference_mimo_scene(nt, nr);
        else if (preset == "phased_array") s = reference_phased_array_scene(nt, nr, get_or<double>(j, "spacing_m", 1.0));
        else throw ConfigError("scene: unknown preset '" + preset + "'");
    }
    if (j.contains("tx")) {
        s.tx.clear();
        for (const auto& p : j.at("tx")) s.tx.push_back(to_vec3(p, scale, "scene.tx"));
    }
    if (j.contains("rx")) {
        s.rx.clear();
        for (const auto& p : j.at("rx")) s.rx.push_back(to_vec3(p, scale, "scene.rx"));
    }
    if (j.contains("target")) s.target = to_vec3(j.at("target"), scale, "scene.target");
    s.carrier_hz = get_or<double>(j, "carrier_hz", s.carrier_hz);
    s.path_loss_exp = get_or<double>(j, "path_loss_exp", s.path_loss_exp);
    s.c = get_or<double>(j, "c", s.c);
    s.num_scatterers = get_or<int>(j, "num_scatterers", s.num_scatterers);
    s.validate();
    return s;
}

inline Json scene_to_json(const SceneConfig& s) {
    Json j;
    j["units"] = "m";
    j["tx"] = Json::array();
    for (const auto& p : s.tx) j["tx"].push_back(from_vec3(p));
    j["rx"] = Json::array();
    for (const auto& p : s.rx) j["rx"].push_back(from_vec3(p));
    j["target"] = from_vec3(s.target);
    j["carrier_hz"] = s.carrier_hz;
    j["path_loss_exp"] = s.path_loss_exp;
    j["c"] = s.c;
    j["num_scatterers"] = s.num_scatterers;
    return j;
}

template <class E>
E enum_from(const std::string& s, const std::vector<std::pair<std::string, E>>& table, const std::string& what) {
    for (const auto& [name, v] : table)
        if (name == s) return v;
    throw ConfigError(what + ": unknown value '" + s + "'");
}

template <class E>
std::string enum_to(E v, const std::vector<std::pair<std::string, E>>& table) {
    for (const auto& [name, e] : table)
        if (e == v) return name;
    return "unknown";
}

inline const std::vector<std::pair<std::string, Scenario>>& scenario_names() {
    static const std::vector<std::pair<std::string, Scenario>> t{
        {"mimo_extended", Scenario::MimoExtended}, {"mimo_point", Scenario::MimoPoint}, {"phased_array", Scenario::PhasedArray}};
    return t;
}
inline const std::vector<std::pair<std::string, CurveKind>>& curve_names() {
    static const std::vector<std::pair<std::string, CurveKind>> t{{"mse_delay", CurveKind::MseDelay},
                                                                  {"mse_position", CurveKind::MsePosition},
                                                                  {"pmd", CurveKind::Pmd},
                                                                  {"roc", CurveKind::Roc},
                                                                  {"false_alarm", CurveKind::FalseAlarm}};
    return t;
}
inline const std::vector<std::pair<std::string, SnrConvention>>& convention_names() {
    static const std::vector<std::pair<std::string, SnrConvention>> t{{"received", SnrConvention::Received},
                                                                      {"transmit", SnrConvention::Transmit}};
    return t;
}
inline const std::vector<std::pair<std::string, NullModel>>& null_model_names() {
    static const std::vector<std::pair<std::string, NullModel>> t{{"exact", NullModel::Exact},
                                                                  {"orthogonal", NullModel::Orthogonal}};
    return t;
}
inline const std::vector<std::pair<std::string, ExtendedLaw>>& extended_law_names() {
    static const std::vector<std::pair<std::string, ExtendedLaw>> t{{"direct", ExtendedLaw::Direct},
                                                                    {"scatterers", ExtendedLaw::Scatterers}};
    return t;
}
inline const std::vector<std::pair<std::string, ZetaLaw>>& zeta_law_names() {
    static const std::vector<std::pair<std::string, ZetaLaw>> t{
        {"unit_random_phase", ZetaLaw::UnitRandomPhase}, {"fixed", ZetaLaw::Fixed}, {"rayleigh", ZetaLaw::Rayleigh}};
    return t;
}

}  // namespace detail

/// Parses an experiment description. Positions use the scene's "units" (km unless set to "m").
inline ExperimentSpec spec_from_json(const Json& j) {
    using namespace detail;
    reject_unknown(j, {"scenario", "estimator", "detector", "curve", "snr_db", "pfa", "pfa_grid", "snr_fixed_db", "trials",
                       "trial_offset", "seed", "genie_delays", "scene", "bank", "search", "channel", "snr_convention",
                       "null_model", "localize", "threads", "keep_raw"},
                   "spec");
    ExperimentSpec s;
    try {
        s.scenario = enum_from(get_or<std::string>(j, "scenario", "mimo_extended"), scenario_names(), "scenario");
        s.estimator = estimator_from_string(get_or<std::string>(j, "estimator", "mimo_extended_map"));
        if (j.contains("detector")) s.detector = detector_from_string(j.at("detector").get<std::string>());
        s.curve = enum_from(get_or<std::string>(j, "curve", "pmd"), curve_names(), "curve");
        if (j.contains("snr_db")) s.snr_db = range_or_list(j.at("snr_db"), "snr_db");
        s.pfa = get_or<double>(j, "pfa", s.pfa);
        if (j.contains("pfa_grid")) s.pfa_grid = range_or_list(j.at("pfa_grid"), "pfa_grid");
        s.snr_fixed_db = get_or<double>(j, "snr_fixed_db", s.snr_fixed_db);
        const auto trials = get_or<std::int64_t>(j, "trials", static_cast<std::int64_t>(s.trials));
        if (trials < 1) throw ConfigError("spec: trials must be >= 1");
        s.trials = static_cast<std::size_t>(trials);
        s.trial_offset = get_or<std::size_t>(j, "trial_offset", 0);
        s.seed = get_or<std::uint64_t>(j, "seed", s.seed);
        s.genie_delays = get_or<bool>(j, "genie_delays", s.genie_delays);
        s.snr_convention = enum_from(get_or<std::string>(j, "snr_convention", "received"), convention_names(), "snr_convention");
        s.null_model = enum_from(get_or<std::string>(j, "null_model", "exact"), null_model_names(), "null_model");
        s.threads = get_or<std::size_t>(j, "threads", 0);
        s.keep_raw = get_or<bool>(j, "keep_raw", false);

        const Json scene = j.contains("scene") ? j.at("scene") : Json{{"preset", "mimo"}};
        s.scene = scene_from_json(scene);
        const double scale = unit_scale(scene);

        if (j.contains("bank")) {
            const Json& b = j.at("bank");
            reject_unknown(b, {"duration", "samples_per_pulse", "num_samples", "window_start"}, "bank");
            s.bank.duration = get_or<double>(b, "duration", s.bank.duration);
            s.bank.samples_per_pulse = get_or<double>(b, "samples_per_pulse", s.bank.samples_per_pulse);
            s.bank.num_samples = get_or<std::size_t>(b, "num_samples", s.bank.num_samples);
            if (b.contains("window_start")) s.bank.window_start = b.at("window_start").get<double>();
        }
        if (j.contains("search")) {
            const Json& q = j.at("search");
            reject_unknown(q, {"center", "half_width_m", "nodes", "refine", "min_step_fraction", "max_sweeps_per_step",
                               "pa_log_coeff"},
                           "search");
            if (q.contains("center")) s.search.center = to_vec3(q.at("center"), scale, "search.center");
            if (q.contains("half_width_m")) {
                const Vec3 hw = to_vec3(q.at("half_width_m"), 1.0, "search.half_width_m");
                s.search.half_width_x = hw.x();
                s.search.half_width_y = hw.y();
                s.search.half_width_z = hw.z();
            }
            if (q.contains("nodes")) {
                const auto n = q.at("nodes").get<std::vector<std::size_t>>();
                if (n.size() != 3) throw ConfigError("search.nodes: expected 3 counts");
                s.search.nodes_x = n[0];
                s.search.nodes_y = n[1];
                s.search.nodes_z = n[2];
            }
            s.search.refine = get_or<bool>(q, "refine", s.search.refine);
            s.search.min_step_fraction = get_or<double>(q, "min_step_fraction", s.search.min_step_fraction);
            s.search.max_sweeps_per_step = get_or<std::size_t>(q, "max_sweeps_per_step", s.search.max_sweeps_per_step);
            s.search.objective.pa_log_coeff = get_or<double>(q, "pa_log_coeff", s.search.objective.pa_log_coeff);
        }
        if (j.contains("channel")) {
            const Json& c = j.at("channel");
            reject_unknown(c, {"extended_law", "zeta_law", "scatterer_extent_m"}, "channel");
            s.channel.extended_law = enum_from(get_or<std::string>(c, "extended_law", "direct"), extended_law_names(), "extended_law");
            s.channel.zeta_law = enum_from(get_or<std::string>(c, "zeta_law", "unit_random_phase"), zeta_law_names(), "zeta_law");
            s.channel.scatterer_extent_m = get_or<double>(c, "scatterer_extent_m", s.channel.scatterer_extent_m);
        }
        if (j.contains("localize")) {
            const Json& l = j.at("localize");
            reject_unknown(l, {"max_iter", "tol_m"}, "localize");
            s.localize.max_iter = get_or<std::size_t>(l, "max_iter", s.localize.max_iter);
            s.localize.tol_meters = get_or<double>(l, "tol_m", s.localize.tol_meters);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    s.validate();
    return s;
}

/// Fully expanded form (meters, explicit grids); equal specs give equal text.
inline Json spec_to_json(const ExperimentSpec& s) {
    using namespace detail;
    Json j;
    j["scenario"] = enum_to(s.scenario, scenario_names());
    j["estimator"] = to_string(s.estimator);
    j["detector"] = to_string(s.detector_kind());
    j["curve"] = enum_to(s.curve, curve_names());
    j["snr_db"] = s.snr_db;
    j["pfa"] = s.pfa;
    j["pfa_grid"] = s.pfa_grid;
    j["snr_fixed_db"] = s.snr_fixed_db;
    j["trials"] = s.trials;
    j["trial_offset"] = s.trial_offset;
    j["seed"] = s.seed;
    j["genie_delays"] = s.genie_delays;
    j["snr_convention"] = enum_to(s.snr_convention, convention_names());
    j["null_model"] = enum_to(s.null_model, null_model_names());
    j["scene"] = scene_to_json(s.scene);
    Json b{{"duration", s.bank.duration}, {"samples_per_pulse", s.bank.samples_per_pulse}, {"num_samples", s.bank.num_samples}};
    if (s.bank.window_start) b["window_start"] = *s.bank.window_start;
    j["bank"] = b;
    Json q{{"half_width_m", {s.search.half_width_x, s.search.half_width_y, s.search.half_width_z}},
           {"nodes", {s.search.nodes_x, s.search.nodes_y, s.search.nodes_z}},
           {"refine", s.search.refine},
           {"min_step_fraction", s.search.min_step_fraction},
           {"max_sweeps_per_step", s.search.max_sweeps_per_step},
           {"pa_log_coeff", s.search.objective.pa_log_coeff}};
    q["center"] = from_vec3(s.search.center.value_or(s.scene.target));
    j["search"] = q;
    j["channel"] = Json{{"extended_law", enum_to(s.channel.extended_law, extended_law_names())},
                        {"zeta_law", enum_to(s.channel.zeta_law, zeta_law_names())},
                        {"scatterer_extent_m", s.channel.scatterer_extent_m}};
    j["localize"] = Json{{"max_iter", s.localize.max_iter}, {"tol_m", s.localize.tol_meters}};
    return j;
}

/// FNV-1a over the canonical dump; threads and output paths are not part of a spec's identity.
inline std::uint64_t spec_hash(const ExperimentSpec& s) {
    const std::string text = spec_to_json(s).dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << v;
    return os.str();
}

inline Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("cannot parse config file " + path + ": " + e.what());
    }
}

inline ExperimentSpec load_spec(const std::string& path) { return spec_from_json(read_json_file(path)); }

}  // namespace mimo_radar

#endif
