#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hrq::textio {

inline constexpr int kFormatVersion = 1;

struct FloatArray {
    std::string name;
    std::vector<std::size_t> shape;
    std::vector<double> data; // row-major
};

struct IntArray {
    std::string name;
    std::vector<std::size_t> shape;
    std::vector<std::int64_t> data;
};

// Versioned structured-text container used for codebooks, checkpoints and
// datasets. Writing is canonical (fixed field order, 17 significant digits)
// so load -> save round-trips are byte-identical and finite doubles survive
// exactly.
struct Document {
    int version = kFormatVersion;
    std::string kind;
    std::vector<std::pair<std::string, std::string>> meta; // ordered
    std::vector<FloatArray> arrays;
    std::vector<IntArray> iarrays;

    void set_meta(std::string key, std::string value);
    const std::string* find_meta(std::string_view key) const;
    std::string require_meta(std::string_view key) const;
    std::int64_t meta_int(std::string_view key) const;
    double meta_double(std::string_view key) const;

    const FloatArray& require_array(std::string_view name) const;
    const IntArray& require_iarray(std::string_view name) const;
};

// Decimal form with 17 significant digits; parses back to the identical double.
std::string format_double(double v);

std::string to_string(const Document& doc);
Document parse(std::string_view text);

void save(const Document& doc, const std::filesystem::path& path);
Document load(const std::filesystem::path& path);

// FNV-1a of a byte buffer, used for dataset manifests.
std::uint64_t checksum(std::string_view bytes);

} // namespace hrq::textio
