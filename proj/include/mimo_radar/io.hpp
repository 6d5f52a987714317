#ifndef MIMO_RADAR_IO_HPP
#define MIMO_RADAR_IO_HPP

#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "mimo_radar/config.hpp"

namespace mimo_radar {

/// Writes through a sibling temporary file and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw RuntimeFailure("cannot write " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw RuntimeFailure("short write to " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw RuntimeFailure("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string curve_csv(const CurveResult& curve) {
    std::string s = "x,y,stderr,n_trials\n";
    for (const auto& p : curve.points)
        s += format_double(p.x) + "," + format_double(p.y) + "," + format_double(p.std_error) + "," +
             std::to_string(p.n_trials) + "\n";
    return s;
}

inline Json curve_json(const CurveResult& curve) {
    Json pts = Json::array();
    for (const auto& p : curve.points)
        pts.push_back(Json{{"x", p.x}, {"y", p.y}, {"stderr", p.std_error}, {"n_trials", p.n_trials}, {"failures", p.failures}});
    return Json{{"kind", to_string(curve.kind)}, {"points", pts}};
}

struct OutputPaths {
    std::filesystem::path data;
    std::filesystem::path sidecar;
};

/// Stores a curve plus its JSON sidecar. An existing sidecar with a different spec hash blocks the write unless forced.
inline OutputPaths write_curve(const std::filesystem::path& out_dir, const std::string& stem, const CurveResult& curve,
                               const ExperimentSpec& spec, double wall_seconds, bool force, const std::string& format = "csv",
                               const Json& extra = Json::object()) {
    std::filesystem::create_directories(out_dir);
    OutputPaths paths{out_dir / (stem + (format == "json" ? ".json" : ".csv")), out_dir / (stem + ".meta.json")};
    if (format == "json") paths.sidecar = out_dir / (stem + ".meta.json");
    const std::string hash = hex64(spec_hash(spec));
    if (std::filesystem::exists(paths.sidecar) && !force) {
        std::string old;
        try {
            old = read_json_file(paths.sidecar.string()).value("spec_hash", "");
        } catch (const ConfigError&) {
            old = "";
        }
        if (old != hash)
            throw ConfigError("refusing to overwrite " + paths.sidecar.string() + " (spec hash " + old + " != " + hash +
                              "); pass --force");
    } else if (std::filesystem::exists(paths.data) && !std::filesystem::exists(paths.sidecar) && !force) {
        throw ConfigError("refusing to overwrite " + paths.data.string() + " without a sidecar; pass --force");
    }
    Json meta{{"spec", spec_to_json(spec)},
              {"seed", spec.seed},
              {"spec_hash", hash},
              {"library_version", kLibraryVersion},
              {"wall_time_s", wall_seconds},
              {"curve", to_string(curve.kind)}};
    Json fails = Json::array();
    for (const auto& p : curve.points) fails.push_back(p.failures);
    meta["failures_per_point"] = fails;
    for (auto it = extra.begin(); it != extra.end(); ++it) meta[it.key()] = it.value();
    write_file_atomic(paths.data, format == "json" ? curve_json(curve).dump(2) + "\n" : curve_csv(curve));
    write_file_atomic(paths.sidecar, meta.dump(2) + "\n");
    return paths;
}

/// Raw little-endian float64 (re, im) pairs, row-major K x N_r, plus a metadata sidecar.
inline void write_snapshot(const std::filesystem::path& path, const SnapshotMatrix& snap) {
    static_assert(std::endian::native == std::endian::little, "snapshot dump assumes a little-endian host");
    std::string bytes;
    bytes.reserve(static_cast<std::size_t>(snap.r.size()) * 16);
    for (Eigen::Index k = 0; k < snap.r.rows(); ++k)
        for (Eigen::Index n = 0; n < snap.r.cols(); ++n) {
            const double parts[2] = {snap.r(k, n).real(), snap.r(k, n).imag()};
            bytes.append(reinterpret_cast<const char*>(parts), sizeof parts);
        }
    write_file_atomic(path, bytes);
    Json meta{{"scene_hash", hex64(snap.meta.scene_hash)},
              {"seed", snap.meta.seed},
              {"trial", snap.meta.trial},
              {"snr", snap.meta.snr},
              {"energy", snap.meta.energy},
              {"hypothesis", snap.meta.target_present ? "H1" : "H0"},
              {"rows", snap.r.rows()},
              {"cols", snap.r.cols()}};
    std::filesystem::path side = path;
    side += ".json";
    write_file_atomic(side, meta.dump(2) + "\n");
}

inline ComplexMatrix read_snapshot(const std::filesystem::path& path, Eigen::Index rows, Eigen::Index cols) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open snapshot " + path.string());
    ComplexMatrix r(rows, cols);
    for (Eigen::Index k = 0; k < rows; ++k)
        for (Eigen::Index n = 0; n < cols; ++n) {
            double parts[2];
            in.read(reinterpret_cast<char*>(parts), sizeof parts);
            if (!in) throw RuntimeFailure("snapshot file is truncated: " + path.string());
            r(k, n) = Complex(parts[0], parts[1]);
        }
    return r;
}

}  // namespace mimo_radar

#endif
