#include "corrtrack/hungarian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace corrtrack {

CostMatrix::CostMatrix(int rows_, int cols_, double fill) : rows(rows_), cols(cols_) {
    if (rows_ < 0 || cols_ < 0) throw ShapeError("cost matrix dims must be >= 0");
    cost.assign(static_cast<std::size_t>(rows_) * cols_, fill);
}

void CostMatrix::set_admissible(int r, int c, bool ok) {
    if (admissible.empty()) {
        admissible.assign(static_cast<std::size_t>(rows) * cols, 1);
    }
    admissible[static_cast<std::size_t>(r) * cols + c] = ok ? 1 : 0;
}

namespace {

// Shortest-augmenting-path assignment with potentials (Jonker-Volgenant
// flavour), minimizing over an n x m matrix with n <= m.  Returns, per row,
// the assigned column.  1-based internally; row 0 / col 0 are virtual.
std::vector<int> solve_rect(int n, int m,
                            const std::vector<std::vector<double>>& a) {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
    std::vector<int> p(m + 1, 0);  // p[j]: row matched to column j

    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> dist(m + 1, inf);
        std::vector<int> pre(m + 1, -1);
        std::vector<char> done(m + 1, 0);
        do {
            done[j0] = 1;
            const int i0 = p[j0];
            int j1 = 0;
            double delta = inf;
            for (int j = 1; j <= m; ++j) {
                if (done[j]) continue;
                const double cur = a[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < dist[j]) {
                    dist[j] = cur;
                    pre[j] = j0;
                }
                if (dist[j] < delta) {
                    delta = dist[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= m; ++j) {
                if (done[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    dist[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        while (j0 != 0) {  // flip the alternating path
            const int j1 = pre[j0];
            p[j0] = p[j1];
            j0 = j1;
        }
    }

    std::vector<int> row_to_col(n, -1);
    for (int j = 1; j <= m; ++j)
        if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
    return row_to_col;
}

}  // namespace

Assignment hungarian_solve(const CostMatrix& m) {
    Assignment out;
    if (m.rows == 0 || m.cols == 0) {
        for (int r = 0; r < m.rows; ++r) out.unmatched_rows.push_back(r);
        for (int c = 0; c < m.cols; ++c) out.unmatched_cols.push_back(c);
        return out;
    }
    for (int r = 0; r < m.rows; ++r)
        for (int c = 0; c < m.cols; ++c)
            if (m.admissible_at(r, c) && !std::isfinite(m.cost_at(r, c)))
                throw ValueError("admissible costs must be finite");

    // Inadmissible pairs get a surcharge big enough that any matching using
    // fewer of them always wins; they are stripped from the result below.
    double abs_sum = 0.0;
    for (int r = 0; r < m.rows; ++r)
        for (int c = 0; c < m.cols; ++c)
            if (m.admissible_at(r, c)) abs_sum += std::abs(m.cost_at(r, c));
    const double big = 2.0 * abs_sum + 1.0;

    const bool flip = m.rows > m.cols;  // solver wants rows <= cols
    const int n = flip ? m.cols : m.rows;
    const int mm = flip ? m.rows : m.cols;
    std::vector<std::vector<double>> a(n, std::vector<double>(mm));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < mm; ++j) {
            const int r = flip ? j : i, c = flip ? i : j;
            a[i][j] = m.admissible_at(r, c) ? m.cost_at(r, c) : big;
        }

    const std::vector<int> row_to_col = solve_rect(n, mm, a);

    std::vector<char> row_used(m.rows, 0), col_used(m.cols, 0);
    for (int i = 0; i < n; ++i) {
        const int j = row_to_col[i];
        if (j < 0) continue;
        const int r = flip ? j : i, c = flip ? i : j;
        if (!m.admissible_at(r, c)) continue;  // surcharge pair: really unmatched
        out.pairs.emplace_back(r, c);
        row_used[r] = 1;
        col_used[c] = 1;
    }
    std::sort(out.pairs.begin(), out.pairs.end());
    for (const auto& [r, c] : out.pairs) out.total_cost += m.cost_at(r, c);
    for (int r = 0; r < m.rows; ++r)
        if (!row_used[r]) out.unmatched_rows.push_back(r);
    for (int c = 0; c < m.cols; ++c)
        if (!col_used[c]) out.unmatched_cols.push_back(c);
    return out;
}

}  // namespace corrtrack
