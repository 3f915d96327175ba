#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace flor {

// Splits text into lines, each keeping its trailing '\n' (the last may lack one).
std::vector<std::string> split_lines(std::string_view text);
std::string join_lines(const std::vector<std::string>& lines);

// Collapses runs of whitespace to one space and trims both ends.
std::string normalize_whitespace(std::string_view line);

// Longest common subsequence of lines as increasing (a_index, b_index) pairs.
using LineMatches = std::vector<std::pair<std::size_t, std::size_t>>;
LineMatches match_lines(const std::vector<std::string>& a, const std::vector<std::string>& b,
                        bool ignore_whitespace = false);

// Half-open line range, zero-based.
struct LineRange {
    std::size_t begin = 0;
    std::size_t end = 0;
    bool operator==(const LineRange&) const = default;
};

struct ConflictHunk {
    LineRange base;
    LineRange ours;
    LineRange theirs;
};

struct MergeResult {
    std::optional<std::string> merged; // set iff conflicts is empty
    std::vector<ConflictHunk> conflicts;
    bool clean() const { return conflicts.empty(); }
};

MergeResult merge3(std::string_view base, std::string_view ours, std::string_view theirs);

struct DiffHunk {
    std::size_t old_start = 0; // zero-based
    std::size_t old_count = 0;
    std::size_t new_start = 0;
    std::size_t new_count = 0;
    std::vector<std::string> lines; // prefixed ' ', '-' or '+', newline stripped
};

std::vector<DiffHunk> diff_lines(std::string_view old_text, std::string_view new_text,
                                 bool ignore_whitespace = false, std::size_t context = 3);

std::string format_unified(const std::vector<DiffHunk>& hunks, std::string_view old_label,
                           std::string_view new_label);

} // namespace flor
