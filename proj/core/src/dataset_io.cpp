#include "magsim/dataset_io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <system_error>

#include "magsim/errors.hpp"

namespace magsim {

namespace {

void append_double(std::string& out, double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

double parse_double(std::string_view token, size_t line_no) {
    double v = 0.0;
    const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
    if (res.ec != std::errc() || res.ptr != token.data() + token.size())
        throw DataError("line " + std::to_string(line_no) + ": bad numeric field '" +
                        std::string(token) + "'");
    return v;
}

long parse_long(std::string_view token, size_t line_no) {
    long v = 0;
    const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
    if (res.ec != std::errc() || res.ptr != token.data() + token.size())
        throw DataError("line " + std::to_string(line_no) + ": bad integer field '" +
                        std::string(token) + "'");
    return v;
}

bool parse_flag(std::string_view token, size_t line_no) {
    if (token == "0") return false;
    if (token == "1") return true;
    throw DataError("line " + std::to_string(line_no) + ": flag field must be 0 or 1, got '" +
                    std::string(token) + "'");
}

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        const size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

}  // namespace

void atomic_write_text(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot open for writing: " + tmp);
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw DataError("write failed: " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw DataError("rename failed for " + path + ": " + ec.message());
}

void write_dataset(const std::string& path, const Dataset& ds, bool diagnostic) {
    std::string out;
    out.reserve(ds.records.size() * 24 + 4096);
    out += "# magsim-dataset v1\n";
    out += "# mode " + ds.mode + "\n";
    out += "# config_hash " + (ds.config_hash.empty() ? std::string("none") : ds.config_hash) +
           "\n";
    out += "# master_seed " + std::to_string(ds.master_seed) + "\n";
    out += "# grid " + std::to_string(ds.grid.rows) + " " + std::to_string(ds.grid.cols) + " ";
    append_double(out, ds.grid.pitch);
    out += " ";
    append_double(out, ds.grid.origin.x());
    out += " ";
    append_double(out, ds.grid.origin.y());
    out += "\n";
    out += "# p_load ";
    append_double(out, ds.p_load);
    out += "\n# p_prepare ";
    append_double(out, ds.p_prepare);
    out += "\n# cycle_rate ";
    append_double(out, ds.cycle_rate);
    out += "\n# timing exposure_s ";
    append_double(out, ds.timing.exposure_time);
    out += " trap_depth_load_K ";
    append_double(out, ds.timing.trap_depth_load);
    out += " trap_depth_sequence_K ";
    append_double(out, ds.timing.trap_depth_sequence);
    out += "\n";
    for (size_t i = 0; i < ds.positions.size(); ++i) {
        out += "# position " + std::to_string(i) + " ";
        append_double(out, ds.positions[i].x());
        out += " ";
        append_double(out, ds.positions[i].y());
        out += "\n";
    }
    if (diagnostic) {
        for (size_t s = 0; s < ds.truth_light_shift.size(); ++s) {
            out += "# truth_light_shift " + std::to_string(s) + " ";
            append_double(out, ds.truth_light_shift[s]);
            out += "\n";
        }
    }
    out += "# units T_seconds=s\n";
    out += "# columns cycle site_or_position T_seconds test_on occupied_before detected_after";
    if (diagnostic) out += " prepared ended_down";
    out += "\n";

    for (const auto& r : ds.records) {
        out += std::to_string(r.cycle);
        out += ' ';
        out += std::to_string(r.site);
        out += ' ';
        append_double(out, r.t_free);
        out += ' ';
        out += r.test_on ? '1' : '0';
        out += ' ';
        out += r.occupied_before ? '1' : '0';
        out += ' ';
        out += r.detected_after ? '1' : '0';
        if (diagnostic) {
            out += ' ';
            out += r.prepared ? '1' : '0';
            out += ' ';
            out += r.ended_down ? '1' : '0';
        }
        out += '\n';
    }
    atomic_write_text(path, out);
}

Dataset read_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open dataset: " + path);

    Dataset ds;
    ds.mode.clear();
    bool diagnostic = false;
    bool saw_magic = false;
    std::string line;
    size_t line_no = 0;
    std::vector<std::pair<size_t, Eigen::Vector2d>> positions;

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto tokens = split_ws(std::string_view(line).substr(1));
            if (tokens.empty()) continue;
            if (line_no == 1) {
                if (tokens.size() < 2 || tokens[0] != "magsim-dataset" || tokens[1] != "v1")
                    throw DataError("line 1: not a magsim-dataset v1 file");
                saw_magic = true;
                continue;
            }
            if (tokens[0] == "mode" && tokens.size() >= 2) {
                ds.mode = std::string(tokens[1]);
            } else if (tokens[0] == "config_hash" && tokens.size() >= 2) {
                ds.config_hash = tokens[1] == "none" ? "" : std::string(tokens[1]);
            } else if (tokens[0] == "master_seed" && tokens.size() >= 2) {
                ds.master_seed = static_cast<uint64_t>(parse_long(tokens[1], line_no));
            } else if (tokens[0] == "grid" && tokens.size() >= 6) {
                ds.grid.rows = static_cast<int>(parse_long(tokens[1], line_no));
                ds.grid.cols = static_cast<int>(parse_long(tokens[2], line_no));
                ds.grid.pitch = parse_double(tokens[3], line_no);
                ds.grid.origin.x() = parse_double(tokens[4], line_no);
                ds.grid.origin.y() = parse_double(tokens[5], line_no);
            } else if (tokens[0] == "p_load" && tokens.size() >= 2) {
                ds.p_load = parse_double(tokens[1], line_no);
            } else if (tokens[0] == "p_prepare" && tokens.size() >= 2) {
                ds.p_prepare = parse_double(tokens[1], line_no);
            } else if (tokens[0] == "cycle_rate" && tokens.size() >= 2) {
                ds.cycle_rate = parse_double(tokens[1], line_no);
            } else if (tokens[0] == "timing" && tokens.size() >= 7) {
                ds.timing.exposure_time = parse_double(tokens[2], line_no);
                ds.timing.trap_depth_load = parse_double(tokens[4], line_no);
                ds.timing.trap_depth_sequence = parse_double(tokens[6], line_no);
            } else if (tokens[0] == "position" && tokens.size() >= 4) {
                positions.emplace_back(
                    static_cast<size_t>(parse_long(tokens[1], line_no)),
                    Eigen::Vector2d(parse_double(tokens[2], line_no),
                                    parse_double(tokens[3], line_no)));
            } else if (tokens[0] == "truth_light_shift" && tokens.size() >= 3) {
                const auto idx = static_cast<size_t>(parse_long(tokens[1], line_no));
                if (ds.truth_light_shift.size() <= idx) ds.truth_light_shift.resize(idx + 1);
                ds.truth_light_shift[idx] = parse_double(tokens[2], line_no);
            } else if (tokens[0] == "columns") {
                for (const auto& t : tokens)
                    if (t == "prepared") diagnostic = true;
            }
            continue;
        }
        if (!saw_magic) throw DataError("line 1: not a magsim-dataset v1 file");

        const auto tokens = split_ws(line);
        const size_t expected = diagnostic ? 8 : 6;
        if (tokens.size() != expected)
            throw DataError("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(expected) + " fields, got " +
                            std::to_string(tokens.size()));
        ShotRecord r;
        r.cycle = static_cast<uint32_t>(parse_long(tokens[0], line_no));
        r.site = static_cast<int32_t>(parse_long(tokens[1], line_no));
        r.t_free = parse_double(tokens[2], line_no);
        r.test_on = parse_flag(tokens[3], line_no);
        r.occupied_before = parse_flag(tokens[4], line_no);
        r.detected_after = parse_flag(tokens[5], line_no);
        if (diagnostic) {
            r.prepared = parse_flag(tokens[6], line_no);
            r.ended_down = parse_flag(tokens[7], line_no);
        }
        ds.records.push_back(r);
    }
    if (!saw_magic) throw DataError("line 1: empty file, not a magsim-dataset");
    if (ds.mode.empty()) throw DataError("header: missing mode line");
    if (ds.mode == "scan") {
        ds.positions.resize(positions.size());
        for (const auto& [idx, pos] : positions) {
            if (idx >= ds.positions.size())
                throw DataError("header: non-contiguous position indices");
            ds.positions[idx] = pos;
        }
    }
    // Rebuild the T axis from the records.
    for (const auto& r : ds.records) ds.t_values.push_back(r.t_free);
    std::sort(ds.t_values.begin(), ds.t_values.end());
    ds.t_values.erase(std::unique(ds.t_values.begin(), ds.t_values.end()), ds.t_values.end());
    return ds;
}

}  // namespace magsim
