#include "flor/query.hpp"

#include "flor/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <tuple>

namespace flor {

namespace {

using LoopKey = std::tuple<std::string, Timestamp, std::string, CtxId>;
using Dims = std::map<std::string, std::string>;
using Path = std::vector<std::pair<std::string, std::string>>; // (dim name, iteration value)

// Rows align only within one group.
struct GroupKey {
    std::string projid;
    int kind = 0; // 0 same-file run, 1 interval, 2 tstamp outside every interval
    Timestamp key = 0;
    std::string filename;
    auto tie() const { return std::tie(projid, kind, key, filename); }
    bool operator<(const GroupKey& o) const { return tie() < o.tie(); }
    bool operator==(const GroupKey& o) const { return tie() == o.tie(); }
};

struct Row {
    GroupKey group;
    Dims dims;
    std::vector<Cell> values;
    Timestamp tstamp = 0;
    std::string projid;
    std::string filename;
};

std::optional<double> as_number(const std::string& s) {
    if (s.empty()) return std::nullopt;
    double v = 0;
    const char* b = s.data();
    const char* e = s.data() + s.size();
    if (*b == '+') return std::nullopt;
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e || !std::isfinite(v)) return std::nullopt;
    return v;
}

Path path_of(const std::map<LoopKey, const LoopIteration*>& loops, const LogRecord& rec) {
    std::vector<const LoopIteration*> chain;
    CtxId ctx = rec.ctx_id;
    while (ctx != 0) {
        auto it = loops.find({rec.projid, rec.tstamp, rec.filename, ctx});
        if (it == loops.end()) {
            throw IntegrityError("record '" + rec.value_name + "' at tstamp " +
                                 std::to_string(rec.tstamp) + " references missing ctx_id " +
                                 std::to_string(ctx));
        }
        if (chain.size() > loops.size()) throw IntegrityError("ctx_id chain does not terminate");
        chain.push_back(it->second);
        ctx = it->second->parent_ctx_id;
    }
    Path path;
    std::map<std::string, int> seen;
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
        int n = ++seen[(*it)->loop_name];
        std::string dim = n == 1 ? (*it)->loop_name : (*it)->loop_name + "_" + std::to_string(n);
        path.emplace_back(dim, (*it)->iteration_value);
    }
    return path;
}

std::map<LoopKey, const LoopIteration*> index_loops(const StoreSnapshot& store) {
    std::map<LoopKey, const LoopIteration*> out;
    for (const auto& l : store.loops) out[{l.projid, l.tstamp, l.filename, l.ctx_id}] = &l;
    return out;
}

std::vector<const LogRecord*> ordered_records(const StoreSnapshot& store) {
    std::vector<const LogRecord*> recs;
    recs.reserve(store.records.size());
    for (const auto& r : store.records) recs.push_back(&r);
    std::stable_sort(recs.begin(), recs.end(), [](const LogRecord* a, const LogRecord* b) {
        return std::tie(a->tstamp, a->filename, a->seq) < std::tie(b->tstamp, b->filename, b->seq);
    });
    return recs;
}

void check_known(const StoreSnapshot& store, const std::vector<std::string>& names) {
    std::set<std::string> known;
    for (const auto& r : store.records) known.insert(r.value_name);
    std::set<std::string> requested;
    for (const auto& n : names) {
        if (!requested.insert(n).second) throw UsageError("name '" + n + "' requested twice");
    }
    for (const auto& n : names) {
        if (known.count(n)) continue;
        std::string list;
        for (const auto& k : known) list += (list.empty() ? "" : ", ") + k;
        throw NotFound("unknown name '" + n + "'; known names: " + list);
    }
}

// Orders dims so every observed path reads outer to inner; ties by first appearance.
std::vector<std::string> merge_dim_order(const std::vector<Path>& paths) {
    std::vector<std::string> first_seen;
    std::map<std::string, std::size_t> rank;
    std::map<std::string, std::set<std::string>> succ;
    std::map<std::string, int> indeg;
    for (const auto& p : paths) {
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (!rank.count(p[i].first)) {
                rank[p[i].first] = first_seen.size();
                first_seen.push_back(p[i].first);
                indeg[p[i].first] = 0;
            }
            if (i > 0 && succ[p[i - 1].first].insert(p[i].first).second) ++indeg[p[i].first];
        }
    }
    std::vector<std::string> order;
    std::set<std::string> done;
    while (order.size() < first_seen.size()) {
        std::string pick;
        for (const auto& d : first_seen) {
            if (!done.count(d) && indeg[d] == 0) {
                pick = d;
                break;
            }
        }
        if (pick.empty()) {
            // Contradictory nesting across files: fall back to first appearance.
            for (const auto& d : first_seen) {
                if (!done.count(d)) {
                    pick = d;
                    break;
                }
            }
        }
        done.insert(pick);
        order.push_back(pick);
        for (const auto& s : succ[pick]) --indeg[s];
    }
    return order;
}

std::optional<std::string> lookup(const Dims& dims, const std::string& d) {
    auto it = dims.find(d);
    if (it == dims.end()) return std::nullopt;
    return it->second;
}

std::vector<Row> full_outer_join(const std::vector<Row>& left, const std::set<std::string>& left_dims,
                                 const std::vector<Row>& right, const std::set<std::string>& right_dims) {
    std::vector<std::string> shared;
    std::set_intersection(left_dims.begin(), left_dims.end(), right_dims.begin(), right_dims.end(),
                          std::back_inserter(shared));
    using Key = std::pair<GroupKey, std::vector<std::optional<std::string>>>;
    auto key_of = [&](const Row& r) {
        std::vector<std::optional<std::string>> k;
        for (const auto& d : shared) k.push_back(lookup(r.dims, d));
        return Key{r.group, std::move(k)};
    };
    std::map<Key, std::vector<std::size_t>> right_index;
    for (std::size_t j = 0; j < right.size(); ++j) right_index[key_of(right[j])].push_back(j);

    std::vector<Row> out;
    std::vector<bool> right_used(right.size(), false);
    for (const auto& l : left) {
        auto it = right_index.find(key_of(l));
        if (it == right_index.end()) {
            out.push_back(l);
            continue;
        }
        for (std::size_t j : it->second) {
            right_used[j] = true;
            const Row& r = right[j];
            Row m = l;
            for (const auto& [d, v] : r.dims) m.dims.emplace(d, v);
            for (std::size_t c = 0; c < m.values.size(); ++c) {
                if (!m.values[c]) m.values[c] = r.values[c];
            }
            m.tstamp = std::max(l.tstamp, r.tstamp);
            out.push_back(std::move(m));
        }
    }
    for (std::size_t j = 0; j < right.size(); ++j) {
        if (!right_used[j]) out.push_back(right[j]);
    }
    return out;
}

} // namespace

std::vector<std::string> PivotTable::header() const {
    std::vector<std::string> h = dim_columns;
    h.insert(h.end(), value_columns.begin(), value_columns.end());
    return h;
}

std::size_t PivotTable::column(const std::string& name) const {
    auto h = header();
    auto it = std::find(h.begin(), h.end(), name);
    if (it == h.end()) throw NotFound("no column '" + name + "'");
    return static_cast<std::size_t>(it - h.begin());
}

int compare_cells(const Cell& a, const Cell& b) {
    if (!a || !b) return (a ? 1 : 0) - (b ? 1 : 0);
    auto na = as_number(*a);
    auto nb = as_number(*b);
    if (na && nb) {
        if (*na < *nb) return -1;
        if (*na > *nb) return 1;
    } else if (na || nb) {
        return na ? -1 : 1;
    }
    return a->compare(*b) < 0 ? -1 : (a->compare(*b) > 0 ? 1 : 0);
}

std::map<std::string, std::vector<std::string>> dims_of(const StoreSnapshot& store,
                                                        const std::string& name) {
    check_known(store, {name});
    auto loops = index_loops(store);
    std::map<std::string, std::vector<std::string>> out;
    for (const auto& r : store.records) {
        if (r.value_name != name) continue;
        Path p = path_of(loops, r);
        auto& best = out[r.filename];
        if (p.size() > best.size() || (best.empty() && !out.count(r.filename))) {
            best.clear();
            for (const auto& [d, _] : p) best.push_back(d);
        }
    }
    return out;
}

PivotTable dataframe(const StoreSnapshot& store, const std::vector<std::string>& names) {
    PivotTable table;
    table.value_columns = names;
    if (store.records.empty()) {
        table.dim_columns = {"projid", "tstamp", "filename"};
        return table;
    }
    check_known(store, names);

    auto loops = index_loops(store);
    auto records = ordered_records(store);
    std::map<std::string, std::size_t> column_of;
    for (std::size_t i = 0; i < names.size(); ++i) column_of[names[i]] = i;

    std::set<std::string> filenames;
    for (const auto* r : records) {
        if (column_of.count(r->value_name)) filenames.insert(r->filename);
    }
    bool same_file = filenames.size() == 1;

    auto group_of = [&](const LogRecord& r) {
        GroupKey g;
        g.projid = r.projid;
        if (same_file) {
            g.kind = 0;
            g.key = r.tstamp;
            g.filename = r.filename;
            return g;
        }
        for (const auto& iv : store.intervals) {
            if (iv.projid == r.projid && iv.contains(r.tstamp)) {
                g.kind = 1;
                g.key = iv.ts_start;
                return g;
            }
        }
        g.kind = 2;
        g.key = r.tstamp;
        return g;
    };

    // Per-name relations with last-wins on (group, dims).
    std::vector<std::map<std::pair<GroupKey, Dims>, Row>> relations(names.size());
    std::vector<std::set<std::string>> relation_dims(names.size());
    std::vector<Path> paths;
    for (const auto* r : records) {
        auto col = column_of.find(r->value_name);
        if (col == column_of.end()) continue;
        Path p = path_of(loops, *r);
        Row row;
        row.group = group_of(*r);
        for (const auto& [d, v] : p) {
            row.dims[d] = v;
            relation_dims[col->second].insert(d);
        }
        row.values.assign(names.size(), std::nullopt);
        row.values[col->second] = r->value;
        row.tstamp = r->tstamp;
        row.projid = r->projid;
        row.filename = r->filename;
        relations[col->second][{row.group, row.dims}] = row;
        paths.push_back(std::move(p));
    }

    std::vector<Row> acc;
    std::set<std::string> acc_dims;
    for (std::size_t i = 0; i < names.size(); ++i) {
        std::vector<Row> rel;
        for (auto& [_, row] : relations[i]) rel.push_back(std::move(row));
        if (i == 0) {
            acc = std::move(rel);
        } else {
            acc = full_outer_join(acc, acc_dims, rel, relation_dims[i]);
        }
        acc_dims.insert(relation_dims[i].begin(), relation_dims[i].end());
    }

    std::vector<std::string> dim_order = merge_dim_order(paths);
    table.dim_columns = {"projid", "tstamp"};
    if (same_file) table.dim_columns.push_back("filename");
    table.dim_columns.insert(table.dim_columns.end(), dim_order.begin(), dim_order.end());

    for (const auto& row : acc) {
        std::vector<Cell> cells;
        cells.push_back(row.projid);
        cells.push_back(std::to_string(row.tstamp));
        if (same_file) cells.push_back(row.filename);
        for (const auto& d : dim_order) cells.push_back(lookup(row.dims, d));
        cells.insert(cells.end(), row.values.begin(), row.values.end());
        table.rows.push_back(std::move(cells));
    }
    std::sort(table.rows.begin(), table.rows.end(), [](const auto& a, const auto& b) {
        for (std::size_t i = 0; i < a.size(); ++i) {
            int c = compare_cells(a[i], b[i]);
            if (c != 0) return c < 0;
        }
        return false;
    });
    return table;
}

std::optional<std::string> best_checkpoint(const StoreSnapshot& store, const std::string& metric,
                                           bool maximize) {
    bool has_metric = false, has_model = false;
    for (const auto& r : store.records) {
        has_metric = has_metric || r.value_name == metric;
        has_model = has_model || r.value_name == kModelName;
    }
    if (!has_metric || !has_model) return std::nullopt;

    PivotTable df = dataframe(store, {metric, kModelName});
    std::size_t mcol = df.column(metric), hcol = df.column(kModelName), tcol = df.column("tstamp");
    std::optional<std::string> best;
    double best_value = 0;
    Timestamp best_ts = 0;
    for (std::size_t i = 0; i < df.rows.size(); ++i) {
        const auto& row = df.rows[i];
        if (!row[mcol] || !row[hcol]) continue;
        auto v = as_number(*row[mcol]);
        if (!v) {
            std::string where;
            for (std::size_t c = 0; c < df.dim_columns.size(); ++c) {
                where += (c ? ", " : "") + df.dim_columns[c] + "=" + row[c].value_or("");
            }
            throw DataError("metric '" + metric + "' is not a number on row " + std::to_string(i + 1) +
                            " (" + where + "): " + *row[mcol]);
        }
        Timestamp ts = std::stoll(*row[tcol]);
        bool better = !best || (maximize ? *v > best_value : *v < best_value) ||
                      (*v == best_value && ts >= best_ts);
        if (better) {
            best = *row[hcol];
            best_value = *v;
            best_ts = ts;
        }
    }
    return best;
}

std::string to_csv(const PivotTable& table) {
    auto field = [](const std::string& s) {
        if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
        std::string q = "\"";
        for (char c : s) {
            if (c == '"') q += '"';
            q += c;
        }
        return q + "\"";
    };
    std::string out;
    auto header = table.header();
    for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + field(header[i]);
    out += "\r\n";
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + field(row[i].value_or(""));
        out += "\r\n";
    }
    return out;
}

std::string to_aligned(const PivotTable& table) {
    auto header = table.header();
    std::vector<std::size_t> width(header.size());
    auto shown = [](const Cell& c) {
        std::string s = c.value_or("");
        for (char& ch : s) {
            if (ch == '\n' || ch == '\r' || ch == '\t') ch = ' ';
        }
        if (s.size() > 60) s = s.substr(0, 57) + "...";
        return s;
    };
    for (std::size_t i = 0; i < header.size(); ++i) width[i] = header[i].size();
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], shown(row[i]).size());
    }
    std::string out;
    auto emit = [&](const std::vector<std::string>& cells) {
        std::string line;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) line += "  ";
            line += cells[i];
            if (i + 1 < cells.size()) line += std::string(width[i] - cells[i].size(), ' ');
        }
        while (!line.empty() && line.back() == ' ') line.pop_back();
        out += line + "\n";
    };
    emit(header);
    std::vector<std::string> rule;
    for (auto w : width) rule.push_back(std::string(w, '-'));
    emit(rule);
    for (const auto& row : table.rows) {
        std::vector<std::string> cells;
        for (const auto& c : row) cells.push_back(shown(c));
        emit(cells);
    }
    return out;
}

} // namespace flor
