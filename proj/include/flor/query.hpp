#pragma once

#include "flor/types.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace flor {

using Cell = std::optional<std::string>; // nullopt is null

struct PivotTable {
    std::vector<std::string> dim_columns;   // projid, tstamp, [filename], loops outer to inner
    std::vector<std::string> value_columns; // requested names in argument order
    std::vector<std::vector<Cell>> rows;    // dim cells then value cells

    std::vector<std::string> header() const;
    std::size_t column(const std::string& name) const; // throws NotFound
    friend bool operator==(const PivotTable&, const PivotTable&) = default;
};

// Loop path (outer to inner) per filename that logged name; the deepest wins.
std::map<std::string, std::vector<std::string>> dims_of(const StoreSnapshot& store,
                                                        const std::string& name);

// Pivots records into one row per loop context.
//
// When every requested record comes from one filename, rows are keyed by
// (projid, tstamp, filename, loop dims). Otherwise records of one version
// interval are aligned on shared loop dims, the filename column is dropped and
// tstamp is the largest contributing tstamp.
PivotTable dataframe(const StoreSnapshot& store, const std::vector<std::string>& names);

// Orders cells: null < number < text; numbers numerically, text bytewise.
int compare_cells(const Cell& a, const Cell& b);

// Hash of the "model" blob on the row with the best metric. Ties favour the
// later tstamp, then the later row.
std::optional<std::string> best_checkpoint(const StoreSnapshot& store, const std::string& metric,
                                           bool maximize = true);

std::string to_csv(const PivotTable& table);
std::string to_aligned(const PivotTable& table);

inline constexpr const char* kModelName = "model";

} // namespace flor
