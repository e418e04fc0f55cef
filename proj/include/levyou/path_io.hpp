#pragma once

// Text record format for paths:
//
//   d, T, m, J                      header: dimension, horizon, samples, jumps
//   t, x_1, ..., x_d                m sample records
//   s, pre_1..pre_d, post_1..post_d J jump records
//
// Numbers use the shortest round-trip decimal form, so write -> read is exact.
// The analytic integral channel is not serialized.

#include "levyou/paths.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace levyou {

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        fields.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return fields;
}

inline std::size_t parse_count(std::string_view text, std::size_t line) {
    const double v = parse_double(text, line);
    if (v < 0 || v != std::floor(v) || v > 1e15) {
        throw FormatError(line, "expected a non-negative integer");
    }
    return static_cast<std::size_t>(v);
}

}  // namespace detail

inline void write_path(std::ostream& out, const CadlagPath& f) {
    const auto d = f.dimension();
    out << d << ", " << format_double(f.horizon()) << ", " << f.sample_count() << ", " << f.jumps().size() << '\n';
    for (std::size_t k = 0; k < f.sample_count(); ++k) {
        out << format_double(f.time(k));
        for (int i = 0; i < d; ++i) {
            out << ", " << format_double(f.values()(i, static_cast<Eigen::Index>(k)));
        }
        out << '\n';
    }
    for (const auto& jump : f.jumps()) {
        out << format_double(jump.time);
        for (int i = 0; i < d; ++i) out << ", " << format_double(jump.pre[i]);
        for (int i = 0; i < d; ++i) out << ", " << format_double(jump.post[i]);
        out << '\n';
    }
}

inline std::string path_to_string(const CadlagPath& f) {
    std::ostringstream out;
    write_path(out, f);
    return out.str();
}

inline CadlagPath read_path(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    auto next_fields = [&](std::size_t expected) {
        do {
            if (!std::getline(in, line)) {
                throw FormatError(line_no + 1, "unexpected end of file");
            }
            ++line_no;
        } while (line.find_first_not_of(" \t\r") == std::string::npos);
        auto fields = detail::split_fields(line);
        if (fields.size() != expected) {
            throw FormatError(line_no, "expected " + std::to_string(expected) + " fields, found " +
                                           std::to_string(fields.size()));
        }
        return fields;
    };

    const auto header = next_fields(4);
    const auto d = detail::parse_count(header[0], line_no);
    const double horizon = parse_double(header[1], line_no);
    const auto m = detail::parse_count(header[2], line_no);
    const auto njumps = detail::parse_count(header[3], line_no);
    if (d == 0) throw FormatError(line_no, "dimension must be positive");
    if (m < 2) throw FormatError(line_no, "need at least two samples");

    std::vector<double> times(m);
    Matrix values(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(m));
    for (std::size_t k = 0; k < m; ++k) {
        const auto fields = next_fields(d + 1);
        times[k] = parse_double(fields[0], line_no);
        for (std::size_t i = 0; i < d; ++i) {
            values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = parse_double(fields[i + 1], line_no);
        }
    }
    std::vector<JumpEvent> jumps(njumps);
    for (auto& jump : jumps) {
        const auto fields = next_fields(2 * d + 1);
        jump.time = parse_double(fields[0], line_no);
        jump.pre.resize(static_cast<Eigen::Index>(d));
        jump.post.resize(static_cast<Eigen::Index>(d));
        for (std::size_t i = 0; i < d; ++i) {
            jump.pre[static_cast<Eigen::Index>(i)] = parse_double(fields[1 + i], line_no);
            jump.post[static_cast<Eigen::Index>(i)] = parse_double(fields[1 + d + i], line_no);
        }
    }
    try {
        return CadlagPath(horizon, std::move(times), std::move(values), std::move(jumps));
    } catch (const ContractViolation& e) {
        throw FormatError(line_no, e.what());
    }
}

inline CadlagPath path_from_string(const std::string& text) {
    std::istringstream in(text);
    return read_path(in);
}

inline void save_path(const std::string& filename, const CadlagPath& f) {
    std::ofstream out(filename);
    if (!out) throw std::runtime_error("cannot open " + filename + " for writing");
    write_path(out, f);
}

inline CadlagPath load_path(const std::string& filename) {
    std::ifstream in(filename);
    if (!in) throw std::runtime_error("cannot open " + filename);
    return read_path(in);
}

}  // namespace levyou
