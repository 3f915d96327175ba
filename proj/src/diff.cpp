#include "flor/diff.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_map>

namespace flor {

std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start < text.size()) {
        auto nl = text.find('\n', start);
        if (nl == std::string_view::npos) {
            out.emplace_back(text.substr(start));
            break;
        }
        out.emplace_back(text.substr(start, nl - start + 1));
        start = nl + 1;
    }
    return out;
}

std::string join_lines(const std::vector<std::string>& lines) {
    std::string out;
    for (const auto& l : lines) out += l;
    return out;
}

std::string normalize_whitespace(std::string_view line) {
    std::string out;
    bool pending_space = false;
    for (char c : line) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out += ' ';
        pending_space = false;
        out += c;
    }
    return out;
}

namespace {

// Linear-space Myers over interned line ids.
class Matcher {
public:
    Matcher(std::vector<int> a, std::vector<int> b) : a_(std::move(a)), b_(std::move(b)) {}

    LineMatches run() {
        LineMatches out;
        solve(0, 0, static_cast<long>(a_.size()), static_cast<long>(b_.size()), out);
        return out;
    }

private:
    struct Point {
        long x, y;
    };
    struct Snake {
        Point from, to;
    };

    std::vector<int> a_, b_;

    bool eq(long x, long y) const { return a_[static_cast<std::size_t>(x)] == b_[static_cast<std::size_t>(y)]; }

    bool middle_snake(long left, long top, long right, long bottom, Snake& out) const {
        long width = right - left, height = bottom - top;
        long size = width + height;
        if (size == 0) return false;
        long delta = width - height;
        long max = (size + 1) / 2;
        long off = max + 1;
        std::vector<long> vf(static_cast<std::size_t>(2 * max + 3), 0);
        std::vector<long> vb(static_cast<std::size_t>(2 * max + 3), 0);
        auto F = [&](long k) -> long& { return vf[static_cast<std::size_t>(k + off)]; };
        auto B = [&](long c) -> long& { return vb[static_cast<std::size_t>(c + off)]; };
        F(1) = left;
        B(1) = bottom;
        bool odd = (delta % 2) != 0;

        for (long d = 0; d <= max; ++d) {
            for (long k = d; k >= -d; k -= 2) {
                long c = k - delta;
                long px, x;
                if (k == -d || (k != d && F(k - 1) < F(k + 1))) {
                    px = x = F(k + 1);
                } else {
                    px = F(k - 1);
                    x = px + 1;
                }
                long y = top + (x - left) - k;
                long py = (d == 0 || x != px) ? y : y - 1;
                while (x < right && y < bottom && eq(x, y)) {
                    ++x;
                    ++y;
                }
                F(k) = x;
                if (odd && c >= -(d - 1) && c <= d - 1 && y >= B(c)) {
                    out = {{px, py}, {x, y}};
                    return true;
                }
            }
            for (long c = d; c >= -d; c -= 2) {
                long k = c + delta;
                long py, y;
                if (c == -d || (c != d && B(c - 1) > B(c + 1))) {
                    py = y = B(c + 1);
                } else {
                    py = B(c - 1);
                    y = py - 1;
                }
                long x = left + (y - top) + k;
                long px = (d == 0 || y != py) ? x : x + 1;
                while (x > left && y > top && eq(x - 1, y - 1)) {
                    --x;
                    --y;
                }
                B(c) = y;
                if (!odd && k >= -d && k <= d && x <= F(k)) {
                    out = {{x, y}, {px, py}};
                    return true;
                }
            }
        }
        return false;
    }

    // Emits matches between two consecutive path points (at most one edit between diagonals).
    void walk(Point p, Point q, LineMatches& out) const {
        long x = p.x, y = p.y;
        auto diagonal = [&] {
            while (x < q.x && y < q.y && eq(x, y)) {
                out.emplace_back(static_cast<std::size_t>(x), static_cast<std::size_t>(y));
                ++x;
                ++y;
            }
        };
        diagonal();
        long dx = q.x - x, dy = q.y - y;
        if (dx < dy) {
            ++y;
        } else if (dx > dy) {
            ++x;
        }
        diagonal();
    }

    void solve(long left, long top, long right, long bottom, LineMatches& out) const {
        while (left < right && top < bottom && eq(left, top)) {
            out.emplace_back(static_cast<std::size_t>(left), static_cast<std::size_t>(top));
            ++left;
            ++top;
        }
        long r = right, b = bottom;
        while (r > left && b > top && eq(r - 1, b - 1)) {
            --r;
            --b;
        }
        if (left < r && top < b) {
            Snake s;
            if (middle_snake(left, top, r, b, s)) {
                solve(left, top, s.from.x, s.from.y, out);
                walk(s.from, s.to, out);
                solve(s.to.x, s.to.y, r, b, out);
            }
        }
        for (long i = 0; i < right - r; ++i) {
            out.emplace_back(static_cast<std::size_t>(r + i), static_cast<std::size_t>(b + i));
        }
    }
};

} // namespace

LineMatches match_lines(const std::vector<std::string>& a, const std::vector<std::string>& b,
                        bool ignore_whitespace) {
    std::unordered_map<std::string, int> ids;
    auto intern = [&](const std::vector<std::string>& lines) {
        std::vector<int> out;
        out.reserve(lines.size());
        for (const auto& l : lines) {
            std::string key = ignore_whitespace ? normalize_whitespace(l) : l;
            auto [it, _] = ids.emplace(std::move(key), static_cast<int>(ids.size()));
            out.push_back(it->second);
        }
        return out;
    };
    std::vector<int> ia = intern(a);
    std::vector<int> ib = intern(b);
    return Matcher(std::move(ia), std::move(ib)).run();
}

namespace {

bool same_lines(const std::vector<std::string>& x, LineRange rx, const std::vector<std::string>& y,
                LineRange ry) {
    if (rx.end - rx.begin != ry.end - ry.begin) return false;
    return std::equal(x.begin() + static_cast<long>(rx.begin), x.begin() + static_cast<long>(rx.end),
                      y.begin() + static_cast<long>(ry.begin));
}

void append_range(std::vector<std::string>& out, const std::vector<std::string>& src, LineRange r) {
    out.insert(out.end(), src.begin() + static_cast<long>(r.begin), src.begin() + static_cast<long>(r.end));
}

} // namespace

MergeResult merge3(std::string_view base_text, std::string_view ours_text, std::string_view theirs_text) {
    auto base = split_lines(base_text);
    auto ours = split_lines(ours_text);
    auto theirs = split_lines(theirs_text);

    constexpr std::size_t kUnmatched = static_cast<std::size_t>(-1);
    std::vector<std::size_t> to_ours(base.size(), kUnmatched), to_theirs(base.size(), kUnmatched);
    for (auto [o, a] : match_lines(base, ours)) to_ours[o] = a;
    for (auto [o, b] : match_lines(base, theirs)) to_theirs[o] = b;

    MergeResult result;
    std::vector<std::string> merged;
    std::size_t o = 0, a = 0, b = 0;

    auto emit_chunk = [&](LineRange ro, LineRange ra, LineRange rb) {
        bool ours_same = same_lines(base, ro, ours, ra);
        bool theirs_same = same_lines(base, ro, theirs, rb);
        if (ours_same) {
            append_range(merged, theirs, rb);
        } else if (theirs_same || same_lines(ours, ra, theirs, rb)) {
            append_range(merged, ours, ra);
        } else {
            result.conflicts.push_back({ro, ra, rb});
        }
    };

    while (true) {
        // Find the next base line stable in all three sequences.
        std::size_t i = 0;
        bool found = false;
        for (std::size_t oo = o; oo < base.size(); ++oo) {
            if (to_ours[oo] != kUnmatched && to_theirs[oo] != kUnmatched && to_ours[oo] >= a &&
                to_theirs[oo] >= b) {
                i = oo;
                found = true;
                break;
            }
        }
        if (!found) {
            LineRange ro{o, base.size()}, ra{a, ours.size()}, rb{b, theirs.size()};
            if (ro.begin != ro.end || ra.begin != ra.end || rb.begin != rb.end) emit_chunk(ro, ra, rb);
            break;
        }
        std::size_t ai = to_ours[i], bi = to_theirs[i];
        if (i > o || ai > a || bi > b) emit_chunk({o, i}, {a, ai}, {b, bi});
        // Extend the stable run.
        std::size_t len = 0;
        while (i + len < base.size() && to_ours[i + len] == ai + len && to_theirs[i + len] == bi + len) {
            merged.push_back(base[i + len]);
            ++len;
        }
        o = i + len;
        a = ai + len;
        b = bi + len;
    }

    if (result.conflicts.empty()) result.merged = join_lines(merged);
    return result;
}

std::vector<DiffHunk> diff_lines(std::string_view old_text, std::string_view new_text,
                                 bool ignore_whitespace, std::size_t context) {
    auto a = split_lines(old_text);
    auto b = split_lines(new_text);
    auto matches = match_lines(a, b, ignore_whitespace);

    // Edit script as (op, a_index, b_index); op is ' ', '-', '+'.
    struct Op {
        char op;
        std::size_t ai, bi;
    };
    std::vector<Op> ops;
    std::size_t x = 0, y = 0;
    auto flush_until = [&](std::size_t mx, std::size_t my) {
        while (x < mx) ops.push_back({'-', x++, y});
        while (y < my) ops.push_back({'+', x, y++});
    };
    for (auto [mx, my] : matches) {
        flush_until(mx, my);
        ops.push_back({' ', x++, y++});
    }
    flush_until(a.size(), b.size());

    auto strip = [](const std::string& s) {
        return (!s.empty() && s.back() == '\n') ? s.substr(0, s.size() - 1) : s;
    };

    std::vector<DiffHunk> hunks;
    std::size_t n = ops.size();
    std::size_t i = 0;
    while (i < n) {
        if (ops[i].op == ' ') {
            ++i;
            continue;
        }
        std::size_t start = i >= context ? i - context : 0;
        while (start < i && ops[start].op != ' ') ++start;
        std::size_t end = i;
        // Extend while the gap of unchanged lines to the next change is within 2*context.
        while (true) {
            while (end < n && ops[end].op != ' ') ++end;
            std::size_t gap = end;
            while (gap < n && ops[gap].op == ' ') ++gap;
            if (gap < n && gap - end <= 2 * context) {
                end = gap;
                continue;
            }
            end = std::min(n, end + context);
            break;
        }
        DiffHunk h;
        h.old_start = ops[start].ai;
        h.new_start = ops[start].bi;
        for (std::size_t j = start; j < end; ++j) {
            const Op& op = ops[j];
            if (op.op == ' ') {
                h.lines.push_back(" " + strip(b[op.bi]));
                ++h.old_count;
                ++h.new_count;
            } else if (op.op == '-') {
                h.lines.push_back("-" + strip(a[op.ai]));
                ++h.old_count;
            } else {
                h.lines.push_back("+" + strip(b[op.bi]));
                ++h.new_count;
            }
        }
        hunks.push_back(std::move(h));
        i = end;
    }
    return hunks;
}

std::string format_unified(const std::vector<DiffHunk>& hunks, std::string_view old_label,
                           std::string_view new_label) {
    if (hunks.empty()) return {};
    std::string out;
    out += "--- ";
    out += old_label;
    out += "\n+++ ";
    out += new_label;
    out += "\n";
    auto range = [](std::size_t start, std::size_t count) {
        std::size_t shown = count == 0 ? start : start + 1;
        return std::to_string(shown) + "," + std::to_string(count);
    };
    for (const auto& h : hunks) {
        out += "@@ -" + range(h.old_start, h.old_count) + " +" + range(h.new_start, h.new_count) + " @@\n";
        for (const auto& l : h.lines) out += l + "\n";
    }
    return out;
}

} // namespace flor
