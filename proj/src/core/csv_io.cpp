#include "thermotwin/core/csv_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "thermotwin/core/errors.hpp"

namespace thermotwin {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::io, "cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::io, "cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) fail(ErrorKind::io, "write failed for '" + path.string() + "'");
}

void write_trajectory_csv(const fs::path& path, const Trajectory& traj) {
    traj.validate();
    std::string text = trajectory_csv_header;
    text += '\n';
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const auto& c = traj.controls[i];
        const auto& g = traj.ghx[i];
        const auto& s = traj.tes[i];
        const double row[] = {traj.grid.time(i), c.pv006,    c.m_pump_out, c.t_pump_in, c.t_heater_out, g.m_ghx,
                              g.q_ghx,           s.m_tes_in, s.t_tes_out,  s.t_top,     s.t_mid,        s.t_bot};
        for (std::size_t k = 0; k < std::size(row); ++k) {
            if (k) text += ',';
            text += format_double(row[k]);
        }
        text += '\n';
    }
    write_text_file(path, text);
}

namespace {

double parse_number(const std::string& tok, const fs::path& path, std::size_t line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        fail(ErrorKind::data, path.string() + ":" + std::to_string(line) + ": bad number '" + tok + "'");
    }
}

}  // namespace

Trajectory read_trajectory_csv(const fs::path& path, int id, Provenance provenance) {
    std::istringstream in(read_text_file(path));
    std::string line;
    if (!std::getline(in, line)) fail(ErrorKind::data, path.string() + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    require(line == trajectory_csv_header, ErrorKind::data, path.string() + ": unexpected header '" + line + "'");

    std::vector<double> t;
    std::vector<std::array<double, 11>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::array<double, 12> vals{};
        std::size_t k = 0;
        std::size_t start = 0;
        while (true) {
            const auto comma = line.find(',', start);
            const auto tok = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
            require(k < vals.size(), ErrorKind::data, path.string() + ":" + std::to_string(lineno) + ": too many fields");
            vals[k++] = parse_number(tok, path, lineno);
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        require(k == vals.size(), ErrorKind::data, path.string() + ":" + std::to_string(lineno) + ": expected 12 fields");
        t.push_back(vals[0]);
        std::array<double, 11> r{};
        std::copy(vals.begin() + 1, vals.end(), r.begin());
        rows.push_back(r);
    }
    require(t.size() >= 2, ErrorKind::data, path.string() + ": need at least two rows");

    const double dt = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
    require(dt > 0.0, ErrorKind::data, path.string() + ": time column not increasing");
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double expect = t.front() + dt * static_cast<double>(i);
        require(std::abs(t[i] - expect) <= 1e-9 * std::max(1.0, std::abs(t.back())), ErrorKind::data,
                path.string() + ": non-uniform time grid at row " + std::to_string(i + 2));
    }

    Trajectory traj;
    traj.grid = TimeGrid{t.front(), dt, t.size()};
    traj.id = id;
    traj.provenance = provenance;
    traj.controls.resize(t.size());
    traj.ghx.resize(t.size());
    traj.tes.resize(t.size());
    for (std::size_t c = 0; c < all_channels.size(); ++c) {
        std::vector<double> col(t.size());
        for (std::size_t i = 0; i < t.size(); ++i) col[i] = rows[i][c];
        traj.set_channel(all_channels[c], col);
    }
    traj.validate();
    return traj;
}

namespace {

json grid_json(const TimeGrid& g) { return {{"t0", g.t0}, {"dt", g.dt}, {"n_steps", g.n_steps}}; }

}  // namespace

void write_manifest(const fs::path& manifest_path, const DatasetManifest& m) {
    json j;
    j["grid"] = grid_json(m.grid);
    j["trajectories"] = json::array();
    for (const auto& e : m.entries) {
        j["trajectories"].push_back(
            {{"id", e.id}, {"path", e.path}, {"provenance", std::string(to_string(e.provenance))}});
    }
    j["seed"] = m.seed ? json(*m.seed) : json(nullptr);
    j["held_out"] = m.held_out;
    write_text_file(manifest_path, j.dump(2) + "\n");
}

DatasetManifest write_dataset(const fs::path& dir, const Dataset& data, std::optional<std::uint64_t> seed,
                              const std::vector<int>& held_out) {
    data.validate();
    fs::create_directories(dir);
    DatasetManifest m;
    m.grid = data.grid;
    m.seed = seed;
    m.held_out = held_out;
    for (const auto& t : data.trajectories) {
        char name[32];
        std::snprintf(name, sizeof name, "traj_%04d.csv", t.id);
        write_trajectory_csv(dir / name, t);
        m.entries.push_back({t.id, name, t.provenance});
    }
    write_manifest(dir / "manifest.json", m);
    return m;
}

DatasetManifest read_manifest(const fs::path& manifest_path) {
    if (!fs::exists(manifest_path)) fail(ErrorKind::io, "manifest '" + manifest_path.string() + "' not found");
    json j;
    try {
        j = json::parse(read_text_file(manifest_path));
    } catch (const json::exception& e) {
        fail(ErrorKind::manifest, manifest_path.string() + ": " + e.what());
    }
    try {
        DatasetManifest m;
        const auto& g = j.at("grid");
        m.grid = TimeGrid{g.at("t0").get<double>(), g.at("dt").get<double>(), g.at("n_steps").get<std::size_t>()};
        m.grid.validate();
        for (const auto& e : j.at("trajectories")) {
            m.entries.push_back({e.at("id").get<int>(), e.at("path").get<std::string>(),
                                 provenance_from_string(e.value("provenance", std::string("simulated")))});
        }
        if (j.contains("seed") && !j["seed"].is_null()) m.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("held_out")) m.held_out = j["held_out"].get<std::vector<int>>();
        return m;
    } catch (const json::exception& e) {
        fail(ErrorKind::manifest, manifest_path.string() + ": " + e.what());
    }
}

Dataset load_dataset(const fs::path& manifest_path) {
    const auto m = read_manifest(manifest_path);
    const auto base = manifest_path.parent_path();
    Dataset d;
    d.grid = m.grid;
    for (const auto& e : m.entries) {
        const auto p = base / e.path;
        if (!fs::exists(p)) fail(ErrorKind::io, "trajectory file '" + p.string() + "' not found");
        d.trajectories.push_back(read_trajectory_csv(p, e.id, e.provenance));
        const auto& g = d.trajectories.back().grid;
        require(g.n_steps == m.grid.n_steps && std::abs(g.dt - m.grid.dt) <= 1e-9 * m.grid.dt &&
                    std::abs(g.t0 - m.grid.t0) <= 1e-9 * std::max(1.0, m.grid.dt),
                ErrorKind::manifest, p.string() + ": grid disagrees with manifest");
        d.trajectories.back().grid = m.grid;
    }
    d.validate();
    return d;
}

}  // namespace thermotwin
