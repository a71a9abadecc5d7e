#include "csl/io.hpp"

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <system_error>

#include "csl/errors.hpp"

namespace csl {

namespace {

constexpr const char* kMomentsSchema = "# schema=csl.moments.v1";
constexpr const char* kMomentsHeader =
    "t,mean_x,var_x,mean_p,var_p,cov_xp,se_var_x,se_var_p,n_alive";
constexpr const char* kFpeSchema = "# schema=csl.fpe_moments.v1";
constexpr const char* kFpeHeader = "t,mean_x,var_x,var_p,cov_xp,mass";

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

double parse_double(const std::string& s, std::size_t line_no) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw IoError("CSV parse error at line " + std::to_string(line_no) +
                      ": bad number '" + s + "'");
    return v;
}

std::size_t parse_count(const std::string& s, std::size_t line_no) {
    std::size_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw IoError("CSV parse error at line " + std::to_string(line_no) +
                      ": bad count '" + s + "'");
    return v;
}

} // namespace

void atomic_write(const std::filesystem::path& path,
                  const std::string& contents) {
    namespace fs = std::filesystem;
    const fs::path dir = path.parent_path();
    if (!dir.empty()) {
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec)
            throw IoError("cannot create directory " + dir.string() + ": " +
                          ec.message());
    }
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw IoError("cannot open " + tmp.string() + " for writing");
        out.write(contents.data(),
                  static_cast<std::streamsize>(contents.size()));
        out.flush();
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec)
        throw IoError("cannot rename " + tmp.string() + " to " +
                      path.string() + ": " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string moments_to_csv(const EnsembleMoments& moments) {
    std::string out;
    out += kMomentsSchema;
    out += '\n';
    out += kMomentsHeader;
    out += '\n';
    for (const MomentRow& r : moments.rows) {
        out += format_double(r.t);
        out += ',';
        out += format_double(r.mean_x);
        out += ',';
        out += format_double(r.var_x);
        out += ',';
        out += format_double(r.mean_p);
        out += ',';
        out += format_double(r.var_p);
        out += ',';
        out += format_double(r.cov_xp);
        out += ',';
        out += format_double(r.se_var_x);
        out += ',';
        out += format_double(r.se_var_p);
        out += ',';
        out += std::to_string(r.n);
        out += '\n';
    }
    return out;
}

EnsembleMoments moments_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    EnsembleMoments out;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            if (line != kMomentsHeader)
                throw IoError("CSV parse error at line " +
                              std::to_string(line_no) +
                              ": unexpected header '" + line + "'");
            header_seen = true;
            continue;
        }
        const auto fields = split(line, ',');
        if (fields.size() != 9)
            throw IoError("CSV parse error at line " +
                          std::to_string(line_no) + ": expected 9 fields, " +
                          "got " + std::to_string(fields.size()));
        MomentRow r;
        r.t = parse_double(fields[0], line_no);
        r.mean_x = parse_double(fields[1], line_no);
        r.var_x = parse_double(fields[2], line_no);
        r.mean_p = parse_double(fields[3], line_no);
        r.var_p = parse_double(fields[4], line_no);
        r.cov_xp = parse_double(fields[5], line_no);
        r.se_var_x = parse_double(fields[6], line_no);
        r.se_var_p = parse_double(fields[7], line_no);
        r.n = parse_count(fields[8], line_no);
        out.rows.push_back(r);
    }
    if (!header_seen) throw IoError("CSV parse error: no header row found");
    return out;
}

void write_moments_csv(const std::filesystem::path& path,
                       const EnsembleMoments& moments) {
    atomic_write(path, moments_to_csv(moments));
}

EnsembleMoments read_moments_csv(const std::filesystem::path& path) {
    return moments_from_csv(read_file(path));
}

std::string fpe_moments_to_csv(const std::vector<FpeMomentRow>& rows) {
    std::string out;
    out += kFpeSchema;
    out += '\n';
    out += kFpeHeader;
    out += '\n';
    for (const FpeMomentRow& r : rows) {
        out += format_double(r.t);
        out += ',';
        out += format_double(r.mean_x);
        out += ',';
        out += format_double(r.var_x);
        out += ',';
        out += format_double(r.var_p);
        out += ',';
        out += format_double(r.cov_xp);
        out += ',';
        out += format_double(r.mass);
        out += '\n';
    }
    return out;
}

std::string density_to_text(const FPEState& state) {
    const PhaseGrid& g = state.grid;
    std::string out = "# t=" + format_double(state.t) +
                      " nx=" + std::to_string(g.n_x) +
                      " np=" + std::to_string(g.n_p) +
                      " x=[" + format_double(g.x_min) + "," +
                      format_double(g.x_max) + "]" + " p=[" +
                      format_double(g.p_min) + "," + format_double(g.p_max) +
                      "]\n";
    for (std::size_t i = 0; i < g.n_x; ++i) {
        for (std::size_t j = 0; j < g.n_p; ++j) {
            if (j) out += ' ';
            out += format_double(state.density[i * g.n_p + j]);
        }
        out += '\n';
    }
    return out;
}

} // namespace csl
