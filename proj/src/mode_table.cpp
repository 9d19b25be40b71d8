#include "modal/mode_table.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

namespace modal {

using nlohmann::json;

namespace {

json mode_row(const Mode& m, double fs) {
    json row;
    row["omega_rad_per_sample"] = m.omega();
    row["freq_hz"] = m.freq_hz(fs);
    row["alpha_per_sample"] = m.alpha();
    const double t60 = m.t60_seconds(fs);
    if (std::isfinite(t60))
        row["t60_seconds"] = t60;
    else
        row["t60_seconds"] = nullptr;
    row["gamma_s"] = m.gamma_s();
    row["gamma_c"] = m.gamma_c();
    return row;
}

void atomic_write(const std::filesystem::path& path, const std::string& text) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::trunc);
        if (!os)
            throw input_error("cannot write " + tmp.string());
        os << text;
        if (!os)
            throw input_error("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

} // namespace

void write_mode_table(const std::filesystem::path& path, const ModeSet& modes,
                      const ModeTableMeta& meta) {
    json doc;
    doc["sample_rate"] = modes.sample_rate();
    doc["source"] = meta.source.empty() ? to_string(modes.source()) : meta.source;
    doc["params"] = json::object();
    for (const auto& [k, v] : meta.params)
        doc["params"][k] = v;
    doc["modes"] = json::array();
    for (const Mode& m : modes.modes())
        doc["modes"].push_back(mode_row(m, modes.sample_rate()));
    atomic_write(path, doc.dump(2) + "\n");
}

ModeSet read_mode_table(const std::filesystem::path& path, ModeTableMeta* meta) {
    std::ifstream in(path);
    if (!in)
        throw input_error("cannot open mode table: " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw input_error("malformed mode table " + path.string() + ": " + e.what());
    }
    if (!doc.contains("sample_rate") || !doc.contains("modes") || !doc["modes"].is_array())
        throw input_error("mode table missing sample_rate or modes: " + path.string());
    const double fs = doc["sample_rate"].get<double>();
    std::string source = doc.value("source", std::string("plain"));
    if (meta) {
        meta->source = source;
        meta->params.clear();
        if (doc.contains("params"))
            for (auto it = doc["params"].begin(); it != doc["params"].end(); ++it)
                if (it.value().is_number())
                    meta->params[it.key()] = it.value().get<double>();
    }
    std::vector<Mode> modes;
    std::size_t row = 0;
    for (const json& r : doc["modes"]) {
        try {
            modes.emplace_back(r.at("omega_rad_per_sample").get<double>(),
                               r.at("alpha_per_sample").get<double>(),
                               r.at("gamma_s").get<double>(), r.at("gamma_c").get<double>());
        } catch (const std::exception& e) {
            throw input_error("mode table row " + std::to_string(row) + " invalid: " +
                              e.what());
        }
        ++row;
    }
    return ModeSet(std::move(modes), mode_source_from_string(source), fs);
}

void write_mode_csv(const std::filesystem::path& path, const ModeSet& modes) {
    std::string text = "omega_rad_per_sample,freq_hz,alpha_per_sample,t60_seconds,gamma_s,gamma_c\n";
    char buf[256];
    for (const Mode& m : modes.modes()) {
        const double t60 = m.t60_seconds(modes.sample_rate());
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", m.omega(),
                      m.freq_hz(modes.sample_rate()), m.alpha(),
                      std::isfinite(t60) ? t60 : -1.0, m.gamma_s(), m.gamma_c());
        text += buf;
    }
    atomic_write(path, text);
}

} // namespace modal
