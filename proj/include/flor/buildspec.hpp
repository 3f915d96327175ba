#pragma once

#include "flor/store.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace flor {

struct RecipeLine {
    std::string text; // verbatim, without the leading tab and '@' prefix
    bool silent = false;
    friend bool operator==(const RecipeLine&, const RecipeLine&) = default;
};

struct BuildTarget {
    std::string name;
    std::vector<std::string> deps; // expanded, declaration order
    std::vector<RecipeLine> cmds;
    bool cached = false; // rule line carries `# flor:cached`
    friend bool operator==(const BuildTarget&, const BuildTarget&) = default;
};

struct BuildGraph {
    std::string vid;
    std::vector<std::pair<std::string, std::string>> variables; // raw values, declaration order
    std::vector<BuildTarget> targets;                           // declaration order
    std::optional<std::string> default_target;

    const BuildTarget* find(std::string_view name) const;
    bool has_target(std::string_view name) const { return find(name) != nullptr; }
    const BuildTarget& at(std::string_view name) const;

    friend bool operator==(const BuildGraph&, const BuildGraph&) = default;
};

// Restricted dialect: `target: deps` rules, tab-indented recipes, `VAR = value`
// assignments with $(VAR)/${VAR} references, `@` prefixes and `#` comments.
// Anything else raises UnsupportedConstruct rather than being guessed at.
BuildGraph parse_makefile(std::string_view text, std::string vid = {});

// Inverse of parse_makefile up to formatting.
std::string print_makefile(const BuildGraph& graph);

// Expands variable references in a recipe line. $@, $< and $^ refer to `target`.
std::string expand_recipe(const BuildGraph& graph, const BuildTarget& target,
                          std::string_view text);

// Dependencies precede dependents; deps are visited in declaration order.
std::vector<std::string> topo_order(const BuildGraph& graph, std::string_view goal);

using FileTime = std::filesystem::file_time_type;
using MtimeLookup = std::function<std::optional<FileTime>(const std::string& path)>;

// Reads modification times relative to root; absent paths map to nullopt.
MtimeLookup filesystem_mtimes(std::filesystem::path root);

// Make semantics: a target is stale when its marker file is missing, any file
// dependency is newer than the marker, or any target dependency is stale or newer.
// Returned in topo order. Throws NotFound for a missing source file.
std::vector<std::string> stale_targets(const BuildGraph& graph, const MtimeLookup& mtimes,
                                       std::string_view goal);

// build_deps rows for persistence; cmds keep their '@' prefix.
std::vector<BuildDepRow> to_build_deps(const BuildGraph& graph);

} // namespace flor
