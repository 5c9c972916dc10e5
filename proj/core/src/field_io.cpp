#include "nzsg/field_io.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <iterator>
#include <ostream>
#include <string_view>
#include <vector>

#include "nzsg/error.hpp"

namespace nzsg {

std::string format_double(double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::string field_csv_header(int dim) {
    return dim == 1 ? "s,x1,V1,V2,dV1_dx1,dV2_dx1" : "s,x1,x2,V1,V2,dV1_dx1,dV1_dx2,dV2_dx1,dV2_dx2";
}

void write_field_csv(std::ostream& out, const ValueField& field) {
    const Grid& g = field.grid();
    const std::size_t nodes = g.node_count();
    std::string line;
    out << field_csv_header(g.dim) << '\n';
    for (int l = 0; l < g.levels(); ++l) {
        const std::string s = format_double(g.s(l));
        for (std::size_t k = 0; k < nodes; ++k) {
            const Vec x = g.node(k);
            line = s;
            for (int d = 0; d < g.dim; ++d) (line += ',') += format_double(x[d]);
            for (int i = 1; i <= 2; ++i) (line += ',') += format_double(field.player(i).at(g, l, k));
            for (int i = 1; i <= 2; ++i) {
                const Vec& p = field.player(i).grad(g, l, k);
                for (int d = 0; d < g.dim; ++d) (line += ',') += format_double(p[d]);
            }
            line += '\n';
            out << line;
        }
    }
}

ValueField read_field_csv(std::istream& in) {
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::size_t pos = text.find('\n');
    if (pos == std::string::npos) throw ParseError("field file has no header line", 0);
    std::string_view header(text.data(), pos);
    if (!header.empty() && header.back() == '\r') header.remove_suffix(1);
    int dim = 0;
    if (header == field_csv_header(1))
        dim = 1;
    else if (header == field_csv_header(2))
        dim = 2;
    else
        throw ParseError("unexpected field header '" + std::string(header) + "'", 0);
    const std::size_t columns = dim == 1 ? 6 : 9;

    std::vector<double> s_col, x1_col, x2_col, v1, v2;
    ++pos;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        std::size_t stop = end;
        if (stop > pos && text[stop - 1] == '\r') --stop;
        if (stop == pos) {
            pos = end + 1;
            continue;
        }
        double row[9];
        std::size_t col = 0;
        std::size_t at = pos;
        while (true) {
            std::size_t comma = text.find(',', at);
            if (comma == std::string::npos || comma > stop) comma = stop;
            if (col >= columns) throw ParseError("too many columns in field row", at);
            const auto r = std::from_chars(text.data() + at, text.data() + comma, row[col]);
            if (r.ec != std::errc() || r.ptr != text.data() + comma || !std::isfinite(row[col]))
                throw ParseError("invalid number in field row", at);
            ++col;
            if (comma == stop) break;
            at = comma + 1;
        }
        if (col != columns) throw ParseError("too few columns in field row", pos);
        s_col.push_back(row[0]);
        x1_col.push_back(row[1]);
        x2_col.push_back(dim == 2 ? row[2] : 0.0);
        v1.push_back(row[dim == 1 ? 2 : 3]);
        v2.push_back(row[dim == 1 ? 3 : 4]);
        pos = end + 1;
    }
    if (s_col.empty()) throw ParseError("field file has no rows", text.size());

    std::size_t nodes = 0;
    while (nodes < s_col.size() && s_col[nodes] == s_col[0]) ++nodes;
    if (s_col.size() % nodes != 0) throw ParseError("row count is not a multiple of the node count", 0);
    Grid grid;
    grid.dim = dim;
    grid.nodes_per_axis = dim == 1 ? static_cast<int>(nodes) : static_cast<int>(std::lround(std::sqrt(nodes)));
    grid.time_steps = static_cast<int>(s_col.size() / nodes) - 1;
    grid.radius = x1_col[nodes - 1];
    grid.horizon = s_col.back();
    if (grid.node_count() != nodes || grid.time_steps < 1 || s_col[0] != 0.0)
        throw ParseError("field rows do not form a complete grid", 0);
    try {
        grid.check();
    } catch (const DomainError& e) {
        throw ParseError(std::string("inconsistent field grid: ") + e.what(), 0);
    }
    const double tol = 1e-9 * std::max(1.0, grid.radius);
    for (int l = 0; l < grid.levels(); ++l) {
        for (std::size_t k = 0; k < nodes; ++k) {
            const std::size_t r = l * nodes + k;
            const Vec x = grid.node(k);
            if (std::abs(s_col[r] - grid.s(l)) > 1e-9 * grid.horizon || std::abs(x1_col[r] - x[0]) > tol ||
                (dim == 2 && std::abs(x2_col[r] - x[1]) > tol))
                throw ParseError("field row " + std::to_string(r + 1) + " is off the inferred grid", 0);
        }
    }
    ScalarField f1{std::move(v1), {}}, f2{std::move(v2), {}};
    recompute_gradients(grid, f1);
    recompute_gradients(grid, f2);
    return ValueField(grid, std::move(f1), std::move(f2));
}

}  // namespace nzsg
