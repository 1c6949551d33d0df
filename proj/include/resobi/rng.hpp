#ifndef RESOBI_RNG_HPP
#define RESOBI_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace resobi
{

//
// Portable seeded generator. Everything random in this library goes through
// it so that datasets are reproducible bit-for-bit across implementations:
//
//   seeding:   state = splitmix64(seed); a zero state is replaced by 1
//   next():    x ^= x >> 12; x ^= x << 25; x ^= x >> 27;
//              return x * 0x2545F4914F6CDD1D          (xorshift64*)
//   uniform(): (next() >> 11) * 2^-53                  in [0, 1)
//   normal():  sqrt(-2 ln(1 - u1)) * cos(2 pi u2)      one Box-Muller draw,
//              u1 drawn before u2, no caching
//
class Rng
{
public:
    explicit Rng(std::uint64_t seed) noexcept : state_(splitmix64(seed))
    {
        if (state_ == 0)
            state_ = 1;
    }

    static std::uint64_t splitmix64(std::uint64_t x) noexcept
    {
        x += 0x9E3779B97F4A7C15ull;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
        return x ^ (x >> 31);
    }

    // Independent stream `stream` of a master seed.
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) noexcept
    {
        return splitmix64(seed + 0x9E3779B97F4A7C15ull * (stream + 1));
    }

    std::uint64_t next() noexcept
    {
        state_ ^= state_ >> 12;
        state_ ^= state_ << 25;
        state_ ^= state_ >> 27;
        return state_ * 0x2545F4914F6CDD1Dull;
    }

    double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    double normal() noexcept
    {
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(1.0 - u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    // Uniform integer in [0, n) by multiply-shift on the top 32 bits; n > 0.
    std::uint64_t below(std::uint64_t n) noexcept
    {
        return ((next() >> 32) * n) >> 32;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) noexcept
    {
        for (std::size_t i = v.size(); i > 1; --i)
        {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
};

} // namespace resobi

#endif
