#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <boost/rational.hpp>

namespace aqft {

using cplx = std::complex<double>;
using Rat = boost::rational<long long>;

/// Entries with modulus below this are dropped from sparse storage.
inline constexpr double kZeroThreshold = 1e-14;

struct AqftError : std::runtime_error {
    explicit AqftError(const std::string& msg) : std::runtime_error(msg) {}
};

inline double to_double(const Rat& r)
{
    return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

} // namespace aqft
