#pragma once

#include "cil/sparse_vector.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace cil {

/// Malformed LIBSVM input. `line` and `column` are 1-based; `byte_offset` is
/// the offset of the offending token from the start of the stream when known.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line, std::size_t column,
               std::optional<std::size_t> byte_offset = std::nullopt)
        : std::runtime_error(format(what, line, column, byte_offset))
        , line_(line)
        , column_(column)
        , byte_offset_(byte_offset)
    {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }
    [[nodiscard]] std::size_t column() const noexcept { return column_; }
    [[nodiscard]] std::optional<std::size_t> byte_offset() const noexcept { return byte_offset_; }

private:
    static std::string format(const std::string& what, std::size_t line, std::size_t column,
                              std::optional<std::size_t> byte_offset)
    {
        std::string s = "line " + std::to_string(line) + ", column " + std::to_string(column);
        if (byte_offset) s += " (byte " + std::to_string(*byte_offset) + ")";
        return s + ": " + what;
    }

    std::size_t line_;
    std::size_t column_;
    std::optional<std::size_t> byte_offset_;
};

namespace detail {

inline bool is_blank(char c) noexcept { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }

struct Token {
    std::string_view text;
    std::size_t column;  // 1-based
};

inline std::vector<Token> split_tokens(std::string_view line)
{
    std::vector<Token> tokens;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && is_blank(line[i])) ++i;
        if (i >= line.size() || line[i] == '#') break;
        std::size_t start = i;
        while (i < line.size() && !is_blank(line[i])) ++i;
        tokens.push_back({line.substr(start, i - start), start + 1});
    }
    return tokens;
}

inline std::optional<double> parse_double(std::string_view s)
{
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

inline std::optional<std::uint64_t> parse_index(std::string_view s)
{
    if (s.empty()) return std::nullopt;
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

}  // namespace detail

/// Parses one LIBSVM row "<label> <idx>:<val> ...". Indices are 1-based on disk
/// and become 0-based in memory. Label 0 is read as -1.
inline LabeledInstance parse_libsvm_line(std::string_view line, std::size_t line_number = 1,
                                         std::optional<std::size_t> line_offset = std::nullopt)
{
    auto fail = [&](const std::string& what, std::size_t column) -> ParseError {
        std::optional<std::size_t> at;
        if (line_offset) at = *line_offset + column - 1;
        return ParseError(what, line_number, column, at);
    };

    const auto tokens = detail::split_tokens(line);
    if (tokens.empty()) throw fail("missing label", 1);

    LabeledInstance inst;
    const auto label = detail::parse_double(tokens[0].text);
    if (!label) throw fail("malformed label '" + std::string(tokens[0].text) + "'", tokens[0].column);
    if (*label == 1.0) {
        inst.label = Label::positive;
    } else if (*label == -1.0 || *label == 0.0) {
        inst.label = Label::negative;
    } else {
        throw fail("label must be -1, 0, or +1, got '" + std::string(tokens[0].text) + "'",
                   tokens[0].column);
    }

    std::uint64_t previous = 0;
    for (std::size_t k = 1; k < tokens.size(); ++k) {
        const auto& tok = tokens[k];
        const auto colon = tok.text.find(':');
        if (colon == std::string_view::npos) {
            throw fail("expected index:value, got '" + std::string(tok.text) + "'", tok.column);
        }
        const auto index = detail::parse_index(tok.text.substr(0, colon));
        if (!index || *index == 0 || *index > std::numeric_limits<FeatureIndex>::max()) {
            throw fail("malformed feature index '" + std::string(tok.text.substr(0, colon)) + "'",
                       tok.column);
        }
        if (*index <= previous) {
            throw fail("feature indices must be strictly increasing", tok.column);
        }
        previous = *index;
        const auto value = detail::parse_double(tok.text.substr(colon + 1));
        if (!value) {
            throw fail("malformed feature value '" + std::string(tok.text.substr(colon + 1)) + "'",
                       tok.column + colon + 1);
        }
        if (!std::isfinite(*value)) throw fail("non-finite feature value", tok.column + colon + 1);
        inst.features.push_back(static_cast<FeatureIndex>(*index - 1), *value);
    }
    return inst;
}

/// Writes a row back in LIBSVM text form using shortest round-trip formatting.
inline std::string format_libsvm_line(const LabeledInstance& inst)
{
    std::string out = inst.label == Label::positive ? "+1" : "-1";
    std::array<char, 64> buf{};
    for (const auto& e : inst.features) {
        out += ' ';
        out += std::to_string(static_cast<std::uint64_t>(e.index) + 1);
        out += ':';
        auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), e.value);
        out.append(buf.data(), ptr);
    }
    return out;
}

/// Pulls fixed-size batches of rows from a text stream. Only the current batch
/// is held in memory.
class MinibatchReader {
public:
    MinibatchReader(std::istream& in, std::size_t batch_size)
        : in_(in)
        , batch_size_(batch_size)
    {
        if (batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");
    }

    /// Next batch, or nullopt at end of stream. The final batch may be short.
    std::optional<std::vector<LabeledInstance>> next()
    {
        std::vector<LabeledInstance> batch;
        batch.reserve(batch_size_);
        std::string line;
        while (batch.size() < batch_size_ && std::getline(in_, line)) {
            const std::size_t offset = offset_;
            offset_ += line.size() + 1;
            ++line_number_;
            if (detail::split_tokens(line).empty()) continue;
            batch.push_back(parse_libsvm_line(line, line_number_, offset));
        }
        if (batch.empty()) return std::nullopt;
        rows_read_ += batch.size();
        return batch;
    }

    [[nodiscard]] std::size_t rows_read() const noexcept { return rows_read_; }
    [[nodiscard]] std::size_t batch_size() const noexcept { return batch_size_; }

private:
    std::istream& in_;
    std::size_t batch_size_;
    std::size_t line_number_ = 0;
    std::size_t offset_ = 0;
    std::size_t rows_read_ = 0;
};

inline std::vector<LabeledInstance> read_libsvm(std::istream& in)
{
    std::vector<LabeledInstance> rows;
    MinibatchReader reader(in, 4096);
    while (auto batch = reader.next()) {
        for (auto& r : *batch) rows.push_back(std::move(r));
    }
    return rows;
}

inline std::vector<LabeledInstance> read_libsvm_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return read_libsvm(in);
}

}  // namespace cil
