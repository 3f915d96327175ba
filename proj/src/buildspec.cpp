#include "flor/buildspec.hpp"

#include "flor/error.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace fs = std::filesystem;

namespace flor {

const BuildTarget* BuildGraph::find(std::string_view name) const {
    auto it = std::find_if(targets.begin(), targets.end(),
                           [&](const BuildTarget& t) { return t.name == name; });
    return it == targets.end() ? nullptr : &*it;
}

const BuildTarget& BuildGraph::at(std::string_view name) const {
    if (const auto* t = find(name)) return *t;
    throw NotFound("unknown target '" + std::string(name) + "'");
}

namespace {

constexpr std::string_view kCachedDirective = "flor:cached";

std::string_view trim(std::string_view s) {
    auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

std::vector<std::string> split_words(std::string_view s) {
    std::vector<std::string> words;
    std::istringstream in{std::string(s)};
    std::string w;
    while (in >> w) words.push_back(w);
    return words;
}

bool valid_variable_name(std::string_view name) {
    return !name.empty() && std::none_of(name.begin(), name.end(), [](char c) {
        return c == ' ' || c == '\t' || c == '$' || c == '(' || c == ')' || c == '{' ||
               c == '}' || c == ':' || c == '=' || c == '#';
    });
}

struct Automatic {
    const BuildTarget* target = nullptr;
};

using VarMap = std::map<std::string, std::string, std::less<>>;

// Recursive expansion; `depth` guards self-referential variables.
std::string expand(std::string_view text, const VarMap& vars, const Automatic& autos,
                   std::size_t line, int depth = 0) {
    if (depth > 32) {
        throw ParseError(line, "recursive variable reference");
    }
    std::string out;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (c != '$') {
            out.push_back(c);
            continue;
        }
        if (i + 1 >= text.size()) {
            out.push_back('$');
            break;
        }
        char next = text[i + 1];
        if (next == '$') {
            out.push_back('$');
            ++i;
            continue;
        }
        std::string name;
        if (next == '(' || next == '{') {
            char close = next == '(' ? ')' : '}';
            auto end = text.find(close, i + 2);
            if (end == std::string_view::npos) {
                throw ParseError(line, "unterminated variable reference");
            }
            name = std::string(text.substr(i + 2, end - i - 2));
            if (!valid_variable_name(name)) {
                throw UnsupportedConstruct(line, "unsupported reference '$" + std::string(1, next) +
                                                     name + close + "' (functions are not supported)");
            }
            i = end;
        } else {
            name = std::string(1, next);
            ++i;
        }
        if (name == "@" || name == "<" || name == "^") {
            if (!autos.target) {
                throw UnsupportedConstruct(line, "automatic variable $" + name + " outside a recipe");
            }
            const auto& t = *autos.target;
            if (name == "@") {
                out += t.name;
            } else if (name == "<") {
                if (!t.deps.empty()) out += t.deps.front();
            } else {
                std::vector<std::string> uniq;
                for (const auto& d : t.deps) {
                    if (std::find(uniq.begin(), uniq.end(), d) == uniq.end()) uniq.push_back(d);
                }
                for (std::size_t k = 0; k < uniq.size(); ++k) {
                    if (k) out.push_back(' ');
                    out += uniq[k];
                }
            }
            continue;
        }
        if (name.size() == 1 && !std::isalnum(static_cast<unsigned char>(name[0])) &&
            name[0] != '_') {
            throw UnsupportedConstruct(line, "unsupported automatic variable $" + name);
        }
        if (auto it = vars.find(name); it != vars.end()) {
            out += expand(it->second, vars, autos, line, depth + 1);
        }
    }
    return out;
}

// Splits a non-recipe line at its comment; returns (content, comment).
std::pair<std::string_view, std::string_view> split_comment(std::string_view line) {
    auto pos = line.find('#');
    if (pos == std::string_view::npos) return {line, {}};
    return {line.substr(0, pos), line.substr(pos + 1)};
}

const std::set<std::string, std::less<>> kDirectives = {
    "include", "-include", "sinclude", "ifeq",   "ifneq",    "ifdef",   "ifndef",
    "else",    "endif",    "define",   "endef",  "export",   "unexport", "override",
    "vpath",   "undefine", "private",  "load",   "-load",
};

struct Parser {
    BuildGraph graph;
    VarMap vars;
    static constexpr std::size_t kNone = static_cast<std::size_t>(-1);
    std::size_t current = kNone; // index of the rule receiving recipe lines

    void parse(std::string_view text) {
        std::vector<std::string> lines;
        {
            std::string cur;
            for (char c : text) {
                if (c == '\n') {
                    lines.push_back(std::move(cur));
                    cur.clear();
                } else {
                    cur.push_back(c);
                }
            }
            if (!cur.empty()) lines.push_back(std::move(cur));
        }

        for (std::size_t idx = 0; idx < lines.size(); ++idx) {
            std::size_t lineno = idx + 1;
            std::string line = lines[idx];
            if (!line.empty() && line.back() == '\r') line.pop_back();

            if (!line.empty() && line.front() == '\t') {
                if (trim(line).empty()) continue;
                if (current == kNone) {
                    throw ParseError(lineno, "recipe line without a preceding rule");
                }
                add_recipe(std::string_view(line).substr(1), lineno);
                continue;
            }

            // Join backslash continuations of non-recipe lines.
            while (!line.empty() && line.back() == '\\' && idx + 1 < lines.size()) {
                line.pop_back();
                line += ' ';
                line += lines[++idx];
                if (!line.empty() && line.back() == '\r') line.pop_back();
            }

            auto [content_raw, comment] = split_comment(line);
            std::string_view content = trim(content_raw);
            if (content.empty()) continue; // blank or comment-only lines keep the recipe context

            auto first_word = split_words(content).front();
            if (kDirectives.count(first_word)) {
                throw UnsupportedConstruct(lineno, "unsupported directive '" + first_word + "'");
            }

            auto eq = content.find('=');
            auto colon = content.find(':');
            if (eq != std::string_view::npos && (colon == std::string_view::npos || eq < colon)) {
                parse_assignment(content, eq, lineno);
                current = kNone;
            } else if (colon != std::string_view::npos) {
                parse_rule(content, colon, comment, lineno);
            } else {
                throw ParseError(lineno, "expected a rule or variable assignment");
            }
        }
        check_acyclic();
    }

    void parse_assignment(std::string_view content, std::size_t eq, std::size_t lineno) {
        if (eq > 0 && std::string_view("?+!").find(content[eq - 1]) != std::string_view::npos) {
            throw UnsupportedConstruct(lineno, std::string("unsupported assignment operator '") +
                                                   content[eq - 1] + "='");
        }
        std::string name(trim(content.substr(0, eq)));
        if (!valid_variable_name(name)) {
            throw ParseError(lineno, "invalid variable name '" + name + "'");
        }
        std::string value(trim(content.substr(eq + 1)));
        vars[name] = value;
        auto it = std::find_if(graph.variables.begin(), graph.variables.end(),
                               [&](const auto& kv) { return kv.first == name; });
        if (it != graph.variables.end()) {
            it->second = value;
        } else {
            graph.variables.emplace_back(name, value);
        }
    }

    void parse_rule(std::string_view content, std::size_t colon, std::string_view comment,
                    std::size_t lineno) {
        if (colon + 1 < content.size() && content[colon + 1] == ':') {
            throw UnsupportedConstruct(lineno, "double-colon rules are not supported");
        }
        if (colon + 1 < content.size() && content[colon + 1] == '=') {
            throw UnsupportedConstruct(lineno, "unsupported assignment operator ':='");
        }
        std::string lhs = expand(trim(content.substr(0, colon)), vars, {}, lineno);
        std::string_view rhs_raw = content.substr(colon + 1);
        if (rhs_raw.find(';') != std::string_view::npos) {
            throw UnsupportedConstruct(lineno, "inline recipes (';') are not supported");
        }
        if (rhs_raw.find('|') != std::string_view::npos) {
            throw UnsupportedConstruct(lineno, "order-only prerequisites are not supported");
        }
        auto names = split_words(lhs);
        if (names.empty()) throw ParseError(lineno, "rule without a target");
        if (names.size() > 1) {
            throw UnsupportedConstruct(lineno, "rules with multiple targets are not supported");
        }
        const std::string& name = names.front();
        if (name.find('%') != std::string::npos) {
            throw UnsupportedConstruct(lineno, "pattern rules are not supported");
        }
        if (name.front() == '.') {
            throw UnsupportedConstruct(lineno, "special target '" + name + "' is not supported");
        }
        if (graph.has_target(name)) {
            throw ParseError(lineno, "duplicate target '" + name + "'");
        }
        std::string rhs = expand(rhs_raw, vars, {}, lineno);
        if (rhs.find('%') != std::string::npos) {
            throw UnsupportedConstruct(lineno, "pattern prerequisites are not supported");
        }

        BuildTarget target;
        target.name = name;
        target.deps = split_words(rhs);
        for (const auto& word : split_words(comment)) {
            if (word == kCachedDirective) target.cached = true;
        }
        graph.targets.push_back(std::move(target));
        current = graph.targets.size() - 1;
        if (!graph.default_target) graph.default_target = name;
    }

    void add_recipe(std::string_view body, std::size_t lineno) {
        RecipeLine rl;
        std::size_t i = 0;
        while (i < body.size() && (body[i] == '@' || body[i] == ' ' || body[i] == '\t')) {
            if (body[i] == '@') rl.silent = true;
            ++i;
        }
        if (i < body.size() && (body[i] == '-' || body[i] == '+')) {
            throw UnsupportedConstruct(lineno, std::string("recipe prefix '") + body[i] +
                                                   "' is not supported");
        }
        std::string_view rest = body.substr(rl.silent ? i : 0);
        if (!rest.empty() && rest.back() == '\\') {
            throw UnsupportedConstruct(lineno, "recipe line continuations are not supported");
        }
        rl.text = std::string(rest);
        // Reject unsupported references now rather than at execution time.
        BuildTarget& owner = graph.targets[current];
        (void)expand(rl.text, vars, Automatic{&owner}, lineno);
        owner.cmds.push_back(std::move(rl));
    }

    void check_acyclic() const {
        enum class Mark { None, Active, Done };
        std::map<std::string, Mark, std::less<>> marks;
        std::vector<std::string> stack;
        std::function<void(const BuildTarget&)> visit = [&](const BuildTarget& t) {
            marks[t.name] = Mark::Active;
            stack.push_back(t.name);
            for (const auto& dep : t.deps) {
                const BuildTarget* d = graph.find(dep);
                if (!d) continue;
                Mark m = marks[d->name];
                if (m == Mark::Active) {
                    auto start = std::find(stack.begin(), stack.end(), d->name);
                    std::string cycle;
                    for (auto it = start; it != stack.end(); ++it) cycle += *it + " -> ";
                    throw CycleError(cycle + d->name);
                }
                if (m == Mark::None) visit(*d);
            }
            stack.pop_back();
            marks[t.name] = Mark::Done;
        };
        for (const auto& t : graph.targets) {
            if (marks[t.name] == Mark::None) visit(t);
        }
    }
};

VarMap var_map(const BuildGraph& graph) {
    VarMap vars;
    for (const auto& [k, v] : graph.variables) vars[k] = v;
    return vars;
}

} // namespace

BuildGraph parse_makefile(std::string_view text, std::string vid) {
    Parser p;
    p.parse(text);
    p.graph.vid = std::move(vid);
    return std::move(p.graph);
}

std::string print_makefile(const BuildGraph& graph) {
    auto escape = [](const std::string& s) {
        std::string out;
        for (char c : s) {
            if (c == '$') out += '$';
            out += c;
        }
        return out;
    };
    std::ostringstream out;
    for (const auto& [name, value] : graph.variables) {
        out << name << " = " << value << "\n";
    }
    for (const auto& t : graph.targets) {
        out << "\n" << escape(t.name) << ":";
        for (const auto& d : t.deps) out << " " << escape(d);
        if (t.cached) out << "  # " << kCachedDirective;
        out << "\n";
        for (const auto& c : t.cmds) {
            out << "\t" << (c.silent ? "@" : "") << c.text << "\n";
        }
    }
    return out.str();
}

std::string expand_recipe(const BuildGraph& graph, const BuildTarget& target,
                          std::string_view text) {
    return expand(text, var_map(graph), Automatic{&target}, 0);
}

std::vector<std::string> topo_order(const BuildGraph& graph, std::string_view goal) {
    const BuildTarget& root = graph.at(goal);
    std::vector<std::string> order;
    std::set<std::string, std::less<>> seen;
    std::function<void(const BuildTarget&)> visit = [&](const BuildTarget& t) {
        seen.insert(t.name);
        for (const auto& dep : t.deps) {
            const BuildTarget* d = graph.find(dep);
            if (d && !seen.count(d->name)) visit(*d);
        }
        order.push_back(t.name);
    };
    visit(root);
    return order;
}

MtimeLookup filesystem_mtimes(fs::path root) {
    return [root = std::move(root)](const std::string& path) -> std::optional<FileTime> {
        std::error_code ec;
        auto t = fs::last_write_time(root / path, ec);
        if (ec) return std::nullopt;
        return t;
    };
}

std::vector<std::string> stale_targets(const BuildGraph& graph, const MtimeLookup& mtimes,
                                       std::string_view goal) {
    std::vector<std::string> order = topo_order(graph, goal);
    std::set<std::string, std::less<>> stale;
    std::vector<std::string> out;
    for (const auto& name : order) {
        const BuildTarget& t = graph.at(name);
        auto marker = mtimes(t.name);
        bool is_stale = !marker;
        for (const auto& dep : t.deps) {
            if (graph.has_target(dep)) {
                if (stale.count(dep)) {
                    is_stale = true;
                } else if (auto dt = mtimes(dep); dt && marker && *dt > *marker) {
                    is_stale = true;
                }
                continue;
            }
            auto dt = mtimes(dep);
            if (!dt) {
                throw NotFound("missing source file '" + dep + "' needed by '" + t.name + "'");
            }
            if (marker && *dt > *marker) is_stale = true;
        }
        if (is_stale) {
            stale.insert(t.name);
            out.push_back(t.name);
        }
    }
    return out;
}

std::vector<BuildDepRow> to_build_deps(const BuildGraph& graph) {
    std::vector<BuildDepRow> rows;
    for (const auto& t : graph.targets) {
        BuildDepRow row{graph.vid, t.name, t.deps, {}, t.cached};
        for (const auto& c : t.cmds) row.cmds.push_back((c.silent ? "@" : "") + c.text);
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace flor
