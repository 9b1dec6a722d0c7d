#include "posr/rng.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "posr/error.hpp"

namespace posr {

Rng::Rng(std::uint64_t seed) : engine_(seed) {}

std::uint64_t Rng::next_u64() {
    return engine_();
}

double Rng::uniform() {
    // 53 bits of the engine output, the usual double construction.
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // Box-Muller on (0,1] x [0,1).
    double u1 = 1.0 - uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

std::int64_t Rng::below(std::int64_t n) {
    if (n <= 0) {
        throw ContractError("Rng::below requires n > 0");
    }
    const std::uint64_t un = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return static_cast<std::int64_t>(x % un);
}

std::string Rng::serialize() const {
    std::ostringstream os;
    os << engine_ << ' ' << (has_spare_ ? 1 : 0) << ' ';
    os.precision(17);
    os << spare_;
    return os.str();
}

void Rng::deserialize(const std::string& state) {
    std::istringstream is(state);
    int spare_flag = 0;
    is >> engine_ >> spare_flag >> spare_;
    if (!is) {
        throw ContractError("Rng::deserialize: malformed state string");
    }
    has_spare_ = spare_flag != 0;
}

} // namespace posr
