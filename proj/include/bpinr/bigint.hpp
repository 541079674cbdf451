#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace bpinr {

// Unsigned big integer, base 2^32 limbs, little-endian. Covers exactly what
// the parameter-bound arithmetic needs: values like (2^(n+1)-2)^(2d) overflow
// 64-bit already at d=2, n=16.
class BigUint {
public:
    BigUint() : limbs_{0} {}

    BigUint(std::uint64_t v) {
        limbs_.push_back(std::uint32_t(v & 0xFFFFFFFFu));
        if (v >> 32) limbs_.push_back(std::uint32_t(v >> 32));
        trim();
    }

    static BigUint pow(std::uint64_t base, unsigned exp) {
        BigUint result(1);
        BigUint b(base);
        while (exp > 0) {
            if (exp & 1u) result *= b;
            b *= b;
            exp >>= 1;
        }
        return result;
    }

    BigUint& operator*=(const BigUint& rhs) {
        std::vector<std::uint32_t> out(limbs_.size() + rhs.limbs_.size(), 0);
        for (std::size_t i = 0; i < limbs_.size(); ++i) {
            std::uint64_t carry = 0;
            for (std::size_t j = 0; j < rhs.limbs_.size(); ++j) {
                std::uint64_t cur = std::uint64_t(limbs_[i]) * rhs.limbs_[j] + out[i + j] + carry;
                out[i + j] = std::uint32_t(cur & 0xFFFFFFFFu);
                carry = cur >> 32;
            }
            std::size_t k = i + rhs.limbs_.size();
            while (carry) {
                std::uint64_t cur = std::uint64_t(out[k]) + carry;
                out[k] = std::uint32_t(cur & 0xFFFFFFFFu);
                carry = cur >> 32;
                ++k;
            }
        }
        limbs_ = std::move(out);
        trim();
        return *this;
    }

    friend BigUint operator*(BigUint lhs, const BigUint& rhs) { return lhs *= rhs; }

    bool operator==(const BigUint& rhs) const { return limbs_ == rhs.limbs_; }
    bool operator!=(const BigUint& rhs) const { return !(*this == rhs); }

    bool operator<(const BigUint& rhs) const {
        if (limbs_.size() != rhs.limbs_.size()) return limbs_.size() < rhs.limbs_.size();
        for (std::size_t i = limbs_.size(); i-- > 0;)
            if (limbs_[i] != rhs.limbs_[i]) return limbs_[i] < rhs.limbs_[i];
        return false;
    }

    bool fits_u64() const { return limbs_.size() <= 2; }

    std::uint64_t to_u64() const {
        if (!fits_u64()) throw std::overflow_error("BigUint does not fit in 64 bits");
        std::uint64_t v = limbs_[0];
        if (limbs_.size() == 2) v |= std::uint64_t(limbs_[1]) << 32;
        return v;
    }

    double to_double() const {
        double v = 0.0;
        for (std::size_t i = limbs_.size(); i-- > 0;) v = v * 4294967296.0 + double(limbs_[i]);
        return v;
    }

    std::string to_string() const {
        std::vector<std::uint32_t> work(limbs_);
        std::string digits;
        while (!(work.size() == 1 && work[0] == 0)) {
            std::uint64_t rem = 0;
            for (std::size_t i = work.size(); i-- > 0;) {
                std::uint64_t cur = (rem << 32) | work[i];
                work[i] = std::uint32_t(cur / 10);
                rem = cur % 10;
            }
            digits.push_back(char('0' + rem));
            while (work.size() > 1 && work.back() == 0) work.pop_back();
        }
        if (digits.empty()) digits = "0";
        std::reverse(digits.begin(), digits.end());
        return digits;
    }

private:
    void trim() {
        while (limbs_.size() > 1 && limbs_.back() == 0) limbs_.pop_back();
    }

    std::vector<std::uint32_t> limbs_; // little-endian, never empty
};

// Decimal rounding to 3 significant figures: value ~= digits * 10^exponent10
// with digits in [100, 999], except values below 1000 which are kept exact.
struct Rounded3Sig {
    std::uint32_t digits = 0;
    int exponent10 = 0;

    double value() const { return double(digits) * std::pow(10.0, exponent10); }
    bool operator==(const Rounded3Sig&) const = default;
};

inline Rounded3Sig round_3sig(const BigUint& v) {
    std::string s = v.to_string();
    if (s.size() <= 3) return {std::uint32_t(std::stoul(s)), 0};
    std::uint32_t head = std::uint32_t(std::stoul(s.substr(0, 3)));
    // round half up on the remainder
    if (s[3] >= '5') ++head;
    int exp = int(s.size()) - 3;
    if (head == 1000) {
        head = 100;
        ++exp;
    }
    return {head, exp};
}

// Human form with magnitude suffixes: "16", "1.30K", "0.81M", "67.7G";
// falls back to scientific notation past exa.
inline std::string format_3sig(const BigUint& v) {
    Rounded3Sig r = round_3sig(v);
    std::string s = v.to_string();
    if (s.size() <= 3) return s;
    int mag = int(s.size()) - 1; // floor(log10)
    if (r.digits == 100 && r.exponent10 == int(s.size()) - 2) ++mag; // rounded up a decade
    static const char* suffix = "\0KMGTPE";
    int group = mag / 3;
    char buf[64];
    if (group >= 1 && group <= 6) {
        double scaled = r.value() / std::pow(10.0, 3 * group);
        int decimals = scaled < 10 ? 2 : (scaled < 100 ? 1 : 0);
        std::snprintf(buf, sizeof buf, "%.*f%c", decimals, scaled, suffix[group]);
    } else {
        std::snprintf(buf, sizeof buf, "%.2fe%+03d", r.digits / 100.0, mag);
    }
    return buf;
}

} // namespace bpinr
