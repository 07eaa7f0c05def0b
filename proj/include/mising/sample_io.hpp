#pragma once

// Sample batches on disk.
// Binary: little-endian u64 N, u64 count, u64 seed, f64 beta, f64 J, f64 h,
// then count * N bytes, one per spin (0x00 = -1, 0x01 = +1).
// CSV: one configuration per row, spins as -1/1.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "mising/error.hpp"
#include "mising/gibbs.hpp"

namespace mising::sample_io {

namespace detail {

inline void put_u64(std::ostream& os, std::uint64_t v) {
    std::array<char, 8> b{};
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    os.write(b.data(), 8);
}

inline std::uint64_t get_u64(std::istream& is) {
    std::array<unsigned char, 8> b{};
    is.read(reinterpret_cast<char*>(b.data()), 8);
    require(is.gcount() == 8, "sample file truncated in header");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{b[i]} << (8 * i);
    return v;
}

}  // namespace detail

inline void write_binary(std::ostream& os, const gibbs::SampleBatch& batch) {
    detail::put_u64(os, batch.N);
    detail::put_u64(os, batch.configurations.size());
    detail::put_u64(os, batch.seed);
    for (double x : {batch.params.beta, batch.params.J, batch.params.h}) detail::put_u64(os, std::bit_cast<std::uint64_t>(x));
    std::string row(batch.N, '\0');
    for (std::uint64_t c = 0; c < batch.configurations.size(); ++c) {
        const auto& cfg = batch.configurations[c];
        for (std::uint64_t i = 0; i < batch.N; ++i) row[i] = cfg[i] > 0 ? '\x01' : '\x00';
        os.write(row.data(), static_cast<std::streamsize>(row.size()));
    }
    require(static_cast<bool>(os), "failed to write sample file");
}

inline gibbs::SampleBatch read_binary(std::istream& is) {
    gibbs::SampleBatch batch;
    batch.N = detail::get_u64(is);
    const std::uint64_t count = detail::get_u64(is);
    batch.seed = detail::get_u64(is);
    batch.params.beta = std::bit_cast<double>(detail::get_u64(is));
    batch.params.J = std::bit_cast<double>(detail::get_u64(is));
    batch.params.h = std::bit_cast<double>(detail::get_u64(is));
    require(batch.N >= 1 && batch.N <= arith::kMaxVolume, "sample file: invalid N");
    require(count <= (std::uint64_t{1} << 40) / batch.N, "sample file: invalid count");
    batch.configurations.assign(count, std::vector<std::int8_t>(batch.N));
    std::string row(batch.N, '\0');
    for (std::uint64_t c = 0; c < count; ++c) {
        is.read(row.data(), static_cast<std::streamsize>(row.size()));
        require(static_cast<std::uint64_t>(is.gcount()) == batch.N, "sample file truncated");
        for (std::uint64_t i = 0; i < batch.N; ++i) {
            require(row[i] == 0 || row[i] == 1, "sample file: spin byte must be 0 or 1");
            batch.configurations[c][i] = row[i] ? 1 : -1;
        }
    }
    return batch;
}

inline void write_csv(std::ostream& os, const gibbs::SampleBatch& batch) {
    for (std::uint64_t i = 1; i <= batch.N; ++i) os << (i > 1 ? "," : "") << "s" << i;
    os << '\n';
    for (std::uint64_t c = 0; c < batch.configurations.size(); ++c) {
        const auto& cfg = batch.configurations[c];
        for (std::uint64_t i = 0; i < batch.N; ++i) os << (i ? "," : "") << static_cast<int>(cfg[i]);
        os << '\n';
    }
}

}  // namespace mising::sample_io
