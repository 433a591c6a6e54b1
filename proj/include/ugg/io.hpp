#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ugg/ablation.hpp"
#include "ugg/errors.hpp"
#include "ugg/inference.hpp"
#include "ugg/matrix.hpp"
#include "ugg/metrics.hpp"

namespace ugg {

// ============================================================
// Dense matrix text format
// ============================================================
//
// UTF-8 text. Lines whose first non-blank character is '#' are comments;
// blank lines are ignored. The first content line is "R C" (two base-10
// integers), followed by R lines of C whitespace-separated decimal floats
// (optional sign, digits, optional fraction, optional e-exponent — no
// inf/nan/hex). Writes use up to 17 significant digits, which round-trips
// IEEE doubles exactly.

namespace detail {

[[noreturn]] inline void parse_fail(const std::string& origin, int line, int col,
                                    const std::string& what) {
    throw Error(ErrorCode::kParseError,
                origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + what);
}

inline bool is_comment_or_blank(const std::string& line) {
    for (char ch : line) {
        if (ch == ' ' || ch == '\t' || ch == '\r') continue;
        return ch == '#';
    }
    return true;
}

// Splits a content line into (token, 1-based start column) pairs.
inline std::vector<std::pair<std::string, int>> tokenize_line(const std::string& line) {
    std::vector<std::pair<std::string, int>> tokens;
    std::size_t pos = 0;
    while (pos < line.size()) {
        while (pos < line.size() &&
               (line[pos] == ' ' || line[pos] == '\t' || line[pos] == '\r'))
            ++pos;
        if (pos >= line.size()) break;
        const std::size_t start = pos;
        while (pos < line.size() && line[pos] != ' ' && line[pos] != '\t' && line[pos] != '\r')
            ++pos;
        tokens.emplace_back(line.substr(start, pos - start), static_cast<int>(start) + 1);
    }
    return tokens;
}

inline bool matches_float_grammar(const std::string& token) {
    std::size_t i = 0;
    if (i < token.size() && (token[i] == '+' || token[i] == '-')) ++i;
    std::size_t digits = 0;
    while (i < token.size() && token[i] >= '0' && token[i] <= '9') ++i, ++digits;
    if (digits == 0) return false;
    if (i < token.size() && token[i] == '.') {
        ++i;
        while (i < token.size() && token[i] >= '0' && token[i] <= '9') ++i;
    }
    if (i < token.size() && (token[i] == 'e' || token[i] == 'E')) {
        ++i;
        if (i < token.size() && (token[i] == '+' || token[i] == '-')) ++i;
        std::size_t exp_digits = 0;
        while (i < token.size() && token[i] >= '0' && token[i] <= '9') ++i, ++exp_digits;
        if (exp_digits == 0) return false;
    }
    return i == token.size();
}

inline double parse_float_token(const std::string& origin, int line, int col,
                                const std::string& token) {
    if (!matches_float_grammar(token))
        parse_fail(origin, line, col, "'" + token + "' is not a decimal float");
    return std::strtod(token.c_str(), nullptr);
}

inline long parse_int_token(const std::string& origin, int line, int col,
                            const std::string& token) {
    for (char ch : token)
        if (ch < '0' || ch > '9')
            parse_fail(origin, line, col, "'" + token + "' is not a non-negative integer");
    return std::strtol(token.c_str(), nullptr, 10);
}

}  // namespace detail

struct MatrixShape {
    std::size_t rows = 0;
    std::size_t cols = 0;
};

inline Matrix read_matrix_stream(std::istream& in, const std::string& origin,
                                 std::optional<MatrixShape> expected = std::nullopt) {
    std::string line;
    int line_no = 0;
    const auto next_content_line =
        [&](std::vector<std::pair<std::string, int>>& tokens) -> bool {
        while (std::getline(in, line)) {
            ++line_no;
            if (detail::is_comment_or_blank(line)) continue;
            tokens = detail::tokenize_line(line);
            return true;
        }
        return false;
    };

    std::vector<std::pair<std::string, int>> tokens;
    if (!next_content_line(tokens))
        detail::parse_fail(origin, line_no + 1, 1, "missing 'R C' header");
    if (tokens.size() != 2)
        detail::parse_fail(origin, line_no, tokens.size() > 2 ? tokens[2].second : 1,
                           "header must be exactly 'R C'");
    const long rows = detail::parse_int_token(origin, line_no, tokens[0].second, tokens[0].first);
    const long cols = detail::parse_int_token(origin, line_no, tokens[1].second, tokens[1].first);
    if (rows < 0 || cols < 0 || (rows > 0 && cols == 0) || (rows == 0 && cols > 0))
        detail::parse_fail(origin, line_no, tokens[0].second, "degenerate dimensions");

    Matrix matrix(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
    for (long r = 0; r < rows; ++r) {
        if (!next_content_line(tokens))
            detail::parse_fail(origin, line_no + 1, 1,
                               "expected row " + std::to_string(r + 1) + " of " +
                                   std::to_string(rows));
        if (static_cast<long>(tokens.size()) != cols)
            detail::parse_fail(origin, line_no,
                               tokens.empty() ? 1 : tokens.back().second,
                               "row has " + std::to_string(tokens.size()) + " values, expected " +
                                   std::to_string(cols));
        for (long c = 0; c < cols; ++c)
            matrix(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) =
                detail::parse_float_token(origin, line_no,
                                          tokens[static_cast<std::size_t>(c)].second,
                                          tokens[static_cast<std::size_t>(c)].first);
    }
    if (next_content_line(tokens))
        detail::parse_fail(origin, line_no, tokens.empty() ? 1 : tokens[0].second,
                           "trailing content after matrix rows");

    if (expected.has_value() && (matrix.rows() != expected->rows || matrix.cols() != expected->cols))
        throw Error(ErrorCode::kShapeMismatch,
                    origin + ": expected " + std::to_string(expected->rows) + " x " +
                        std::to_string(expected->cols) + ", found " +
                        std::to_string(matrix.rows()) + " x " + std::to_string(matrix.cols()));
    return matrix;
}

inline Matrix read_matrix(const std::string& path,
                          std::optional<MatrixShape> expected = std::nullopt) {
    std::ifstream in(path);
    detail::require(in.good(), ErrorCode::kIoError, "cannot open '" + path + "' for reading");
    return read_matrix_stream(in, path, expected);
}

namespace detail {

inline std::string format_double(double value, int significant_digits) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.*g", significant_digits, value);
    return buffer;
}

}  // namespace detail

inline std::string matrix_to_string(const Matrix& matrix) {
    std::string out = std::to_string(matrix.rows()) + " " + std::to_string(matrix.cols()) + "\n";
    for (std::size_t r = 0; r < matrix.rows(); ++r) {
        for (std::size_t c = 0; c < matrix.cols(); ++c) {
            if (c > 0) out += " ";
            out += detail::format_double(matrix(r, c), 17);
        }
        out += "\n";
    }
    return out;
}

// All file writes are atomic: content goes to "<path>.tmp" which is then
// renamed over the target.
inline void write_text_file(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        detail::require(out.good(), ErrorCode::kIoError, "cannot open '" + tmp + "' for writing");
        out << content;
        detail::require(out.good(), ErrorCode::kIoError, "write to '" + tmp + "' failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    detail::require(!ec, ErrorCode::kIoError, "rename '" + tmp + "' -> '" + path + "' failed");
}

inline void write_matrix(const std::string& path, const Matrix& matrix) {
    write_text_file(path, matrix_to_string(matrix));
}

// ============================================================
// Canonical report serialization
// ============================================================
//
// JSON reports are canonical: object keys emitted in sorted order, floats
// with a fixed "%.9g" rendering (9 significant digits), no whitespace
// variation. Re-serializing a parsed report reproduces the bytes exactly.

namespace detail {

inline std::string json_escape(const std::string& s) {
    std::string out;
    for (char ch : s) {
        switch (ch) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default: out += ch;
        }
    }
    return out;
}

inline std::string json_number(double value) { return format_double(value, 9); }

}  // namespace detail

inline std::string ranking_report_to_json(const RankingReport& report) {
    std::string out = "{";
    out += "\"mean_average_precision\":" + detail::json_number(report.mean_average_precision);
    out += ",\"per_query_average_precision\":[";
    for (std::size_t i = 0; i < report.per_query_average_precision.size(); ++i) {
        if (i > 0) out += ",";
        const auto& ap = report.per_query_average_precision[i];
        out += ap.has_value() ? detail::json_number(*ap) : std::string("null");
    }
    out += "],\"recall_at_k\":{";
    bool first = true;
    for (const auto& [k, v] : report.recall_at_k) {
        if (!first) out += ",";
        first = false;
        out += "\"" + std::to_string(k) + "\":" + detail::json_number(v);
    }
    out += "},\"topk_accuracy\":{";
    first = true;
    for (const auto& [k, v] : report.topk_accuracy) {
        if (!first) out += ",";
        first = false;
        out += "\"" + std::to_string(k) + "\":" + detail::json_number(v);
    }
    out += "}}";
    return out;
}

inline std::string ranking_reports_to_json(const std::vector<RankingReport>& reports) {
    detail::require(!reports.empty(), ErrorCode::kInvalidParams, "no reports to serialize");
    std::string out = "[";
    for (std::size_t i = 0; i < reports.size(); ++i) {
        if (i > 0) out += ",";
        out += ranking_report_to_json(reports[i]);
    }
    out += "]";
    return out;
}

inline std::string ranking_reports_to_tsv(const std::vector<RankingReport>& reports) {
    detail::require(!reports.empty(), ErrorCode::kInvalidParams, "no reports to serialize");
    std::string header = "mean_average_precision";
    for (const auto& [k, _] : reports.front().recall_at_k)
        header += "\trecall_at_" + std::to_string(k);
    for (const auto& [k, _] : reports.front().topk_accuracy)
        header += "\ttopk_accuracy_" + std::to_string(k);
    std::string out = header + "\n";
    for (const RankingReport& report : reports) {
        out += detail::json_number(report.mean_average_precision);
        for (const auto& [_, v] : report.recall_at_k) out += "\t" + detail::json_number(v);
        for (const auto& [_, v] : report.topk_accuracy) out += "\t" + detail::json_number(v);
        out += "\n";
    }
    return out;
}

inline std::string ablation_rows_to_json(const std::vector<AblationRow>& rows) {
    detail::require(!rows.empty(), ErrorCode::kInvalidParams, "no ablation rows to serialize");
    std::string out = "{\"rows\":[";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i > 0) out += ",";
        out += "{\"configuration\":\"" + detail::json_escape(rows[i].flags.name()) + "\"";
        out += ",\"mean\":" + ranking_report_to_json(rows[i].mean_report);
        out += ",\"per_scenario\":" + ranking_reports_to_json(rows[i].per_scenario);
        out += "}";
    }
    out += "]}";
    return out;
}

inline std::string ablation_rows_to_tsv(const std::vector<AblationRow>& rows) {
    detail::require(!rows.empty(), ErrorCode::kInvalidParams, "no ablation rows to serialize");
    std::string out = "configuration\tmean_average_precision";
    for (const auto& [k, _] : rows.front().mean_report.recall_at_k)
        out += "\trecall_at_" + std::to_string(k);
    for (const auto& [k, _] : rows.front().mean_report.topk_accuracy)
        out += "\ttopk_accuracy_" + std::to_string(k);
    out += "\n";
    for (const AblationRow& row : rows) {
        out += row.flags.name() + "\t" + detail::json_number(row.mean_report.mean_average_precision);
        for (const auto& [_, v] : row.mean_report.recall_at_k)
            out += "\t" + detail::json_number(v);
        for (const auto& [_, v] : row.mean_report.topk_accuracy)
            out += "\t" + detail::json_number(v);
        out += "\n";
    }
    return out;
}

// Per-round belief/gate dump, full 17-digit precision.
inline std::string trace_to_json(const std::vector<BeliefState>& trace) {
    std::string out = "[";
    for (std::size_t t = 0; t < trace.size(); ++t) {
        if (t > 0) out += ",";
        const BeliefState& state = trace[t];
        out += "{\"iteration\":" + std::to_string(state.iteration);
        out += ",\"negative_gate_probs\":[";
        for (std::size_t e = 0; e < state.negative_gate_probs.size(); ++e) {
            if (e > 0) out += ",";
            out += detail::format_double(state.negative_gate_probs[e], 17);
        }
        out += "],\"node_beliefs\":[";
        for (std::size_t r = 0; r < state.node_beliefs.rows(); ++r) {
            if (r > 0) out += ",";
            out += "[";
            for (std::size_t c = 0; c < state.node_beliefs.cols(); ++c) {
                if (c > 0) out += ",";
                out += detail::format_double(state.node_beliefs(r, c), 17);
            }
            out += "]";
        }
        out += "],\"positive_gate_probs\":[";
        for (std::size_t e = 0; e < state.positive_gate_probs.size(); ++e) {
            if (e > 0) out += ",";
            out += detail::format_double(state.positive_gate_probs[e], 17);
        }
        out += "]}";
    }
    out += "]";
    return out;
}

// ============================================================
// SVG plots
// ============================================================

namespace detail {

inline std::string svg_coord(double v) { return format_double(v, 6); }

}  // namespace detail

struct PlotSeries {
    std::string name;
    std::vector<double> values;  // y at x = 0, 1, ...
};

// Minimal deterministic line plot: light axes, one polyline per series,
// legend in the top-right corner.
inline std::string svg_line_plot(const std::string& title, const std::string& x_label,
                                 const std::string& y_label,
                                 const std::vector<PlotSeries>& series) {
    static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#17becf"};
    const double width = 640, height = 420, margin = 60;
    double lo = 0.0, hi = 1.0;
    std::size_t max_len = 2;
    for (const PlotSeries& s : series) {
        max_len = std::max(max_len, s.values.size());
        for (double v : s.values) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    if (hi <= lo) hi = lo + 1.0;
    const auto x_of = [&](std::size_t idx) {
        return margin + (width - 2 * margin) * static_cast<double>(idx) /
                            static_cast<double>(max_len - 1);
    };
    const auto y_of = [&](double v) {
        return height - margin - (height - 2 * margin) * (v - lo) / (hi - lo);
    };

    std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"420\" "
                      "viewBox=\"0 0 640 420\">\n";
    out += "<rect width=\"640\" height=\"420\" fill=\"white\"/>\n";
    out += "<text x=\"320\" y=\"28\" text-anchor=\"middle\" font-size=\"16\">" +
           detail::json_escape(title) + "</text>\n";
    out += "<line x1=\"60\" y1=\"360\" x2=\"580\" y2=\"360\" stroke=\"black\"/>\n";
    out += "<line x1=\"60\" y1=\"60\" x2=\"60\" y2=\"360\" stroke=\"black\"/>\n";
    out += "<text x=\"320\" y=\"398\" text-anchor=\"middle\" font-size=\"12\">" +
           detail::json_escape(x_label) + "</text>\n";
    out += "<text x=\"18\" y=\"210\" text-anchor=\"middle\" font-size=\"12\" "
           "transform=\"rotate(-90 18 210)\">" +
           detail::json_escape(y_label) + "</text>\n";
    out += "<text x=\"56\" y=\"364\" text-anchor=\"end\" font-size=\"10\">" +
           detail::svg_coord(lo) + "</text>\n";
    out += "<text x=\"56\" y=\"66\" text-anchor=\"end\" font-size=\"10\">" +
           detail::svg_coord(hi) + "</text>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = kColors[s % (sizeof(kColors) / sizeof(kColors[0]))];
        std::string points;
        for (std::size_t i = 0; i < series[s].values.size(); ++i) {
            if (i > 0) points += " ";
            points += detail::svg_coord(x_of(i)) + "," + detail::svg_coord(y_of(series[s].values[i]));
        }
        out += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"2\" "
               "points=\"" + points + "\"/>\n";
        const double ly = 60.0 + 16.0 * static_cast<double>(s);
        out += "<rect x=\"468\" y=\"" + detail::svg_coord(ly - 9) +
               "\" width=\"10\" height=\"10\" fill=\"" + color + "\"/>\n";
        out += "<text x=\"482\" y=\"" + detail::svg_coord(ly) + "\" font-size=\"11\">" +
               detail::json_escape(series[s].name) + "</text>\n";
    }
    out += "</svg>\n";
    return out;
}

// Histogram over [range_lo, range_hi] with equal-width bins.
inline std::string svg_histogram(const std::string& title, const std::vector<double>& values,
                                 int num_bins, double range_lo, double range_hi) {
    detail::require(num_bins > 0 && range_hi > range_lo, ErrorCode::kInvalidParams,
                    "histogram needs bins > 0 and a non-empty range");
    std::vector<int> counts(static_cast<std::size_t>(num_bins), 0);
    for (double v : values) {
        double u = (v - range_lo) / (range_hi - range_lo);
        int bin = static_cast<int>(u * num_bins);
        bin = std::max(0, std::min(num_bins - 1, bin));
        ++counts[static_cast<std::size_t>(bin)];
    }
    int peak = 1;
    for (int c : counts) peak = std::max(peak, c);

    const double width = 640, height = 420, margin = 60;
    const double bar_w = (width - 2 * margin) / num_bins;
    std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"420\" "
                      "viewBox=\"0 0 640 420\">\n";
    out += "<rect width=\"640\" height=\"420\" fill=\"white\"/>\n";
    out += "<text x=\"320\" y=\"28\" text-anchor=\"middle\" font-size=\"16\">" +
           detail::json_escape(title) + "</text>\n";
    out += "<line x1=\"60\" y1=\"360\" x2=\"580\" y2=\"360\" stroke=\"black\"/>\n";
    for (int b = 0; b < num_bins; ++b) {
        const double h = (height - 2 * margin) * counts[static_cast<std::size_t>(b)] / peak;
        out += "<rect x=\"" + detail::svg_coord(margin + b * bar_w) + "\" y=\"" +
               detail::svg_coord(height - margin - h) + "\" width=\"" +
               detail::svg_coord(bar_w * 0.9) + "\" height=\"" + detail::svg_coord(h) +
               "\" fill=\"#1f77b4\"/>\n";
    }
    out += "<text x=\"60\" y=\"376\" text-anchor=\"middle\" font-size=\"10\">" +
           detail::svg_coord(range_lo) + "</text>\n";
    out += "<text x=\"580\" y=\"376\" text-anchor=\"middle\" font-size=\"10\">" +
           detail::svg_coord(range_hi) + "</text>\n";
    out += "</svg>\n";
    return out;
}

// ============================================================
// Report emission
// ============================================================

enum class ReportFormat { kJson, kTsv, kSvg };

// Writes a non-empty report list to `path` in the requested format and
// returns the path. JSON is the canonical form above, TSV one row per
// report, SVG a line plot of the headline metrics across the list.
inline std::string emit_report(const std::vector<RankingReport>& reports, ReportFormat format,
                               const std::string& path) {
    detail::require(!reports.empty(), ErrorCode::kInvalidParams, "no reports to emit");
    switch (format) {
        case ReportFormat::kJson:
            write_text_file(path, ranking_reports_to_json(reports));
            break;
        case ReportFormat::kTsv:
            write_text_file(path, ranking_reports_to_tsv(reports));
            break;
        case ReportFormat::kSvg: {
            PlotSeries map_series{"mean_average_precision", {}};
            PlotSeries top_series{"topk_accuracy", {}};
            PlotSeries recall_series{"recall_at_k", {}};
            for (const RankingReport& report : reports) {
                map_series.values.push_back(report.mean_average_precision);
                if (!report.topk_accuracy.empty())
                    top_series.values.push_back(report.topk_accuracy.begin()->second);
                if (!report.recall_at_k.empty())
                    recall_series.values.push_back(report.recall_at_k.begin()->second);
            }
            std::vector<PlotSeries> series{map_series};
            if (top_series.values.size() == reports.size()) series.push_back(top_series);
            if (recall_series.values.size() == reports.size()) series.push_back(recall_series);
            write_text_file(path,
                            svg_line_plot("ranking metrics", "report index", "metric", series));
            break;
        }
    }
    return path;
}

}  // namespace ugg
