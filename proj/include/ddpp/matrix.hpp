#pragma once

#include <cstdint>
#include <vector>

namespace ddpp {

// Dense 0/1 matrix, row-major. Used for drone-by-delivery assignments:
// rows are drones, columns are deliveries.
struct BinaryMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<std::uint8_t> data;

    BinaryMatrix() = default;
    BinaryMatrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0) {}

    std::uint8_t& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    std::uint8_t at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

    // Number of deliveries assigned to drone r.
    int row_sum(int r) const {
        int s = 0;
        for (int c = 0; c < cols; ++c) s += at(r, c);
        return s;
    }

    // Number of drones delivery c is assigned to.
    int col_sum(int c) const {
        int s = 0;
        for (int r = 0; r < rows; ++r) s += at(r, c);
        return s;
    }

    friend bool operator==(const BinaryMatrix&, const BinaryMatrix&) = default;
};

}  // namespace ddpp
