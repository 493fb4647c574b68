#pragma once

#include <cctype>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>

namespace xrec {

using Name = std::string;
using NameSet = std::set<Name>;

inline bool is_location(std::string_view name) {
    return !name.empty() && name.front() == '#';
}

inline Name location_name(std::uint64_t index) {
    return "#" + std::to_string(index);
}

// Strips a trailing `'N` renaming suffix so repeated renamings stay short.
inline std::string_view base_name(std::string_view name) {
    auto quote = name.rfind('\'');
    if (quote == std::string_view::npos || quote == 0 || quote + 1 == name.size()) {
        return name;
    }
    for (auto i = quote + 1; i < name.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(name[i]))) {
            return name;
        }
    }
    return name.substr(0, quote);
}

/// Per-run supply of fresh variable names of the form `x'N`.
class NameSupply {
public:
    Name fresh(std::string_view hint, const NameSet& avoid) {
        const std::string base(base_name(hint));
        for (;;) {
            Name candidate = base + "'" + std::to_string(++counter_);
            if (!avoid.contains(candidate)) {
                return candidate;
            }
        }
    }

    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t counter_ = 0;
};

/// Per-run supply of heap locations `#N`.
class LocationSupply {
public:
    LocationSupply() = default;
    explicit LocationSupply(std::uint64_t next) : next_(next) {}

    Name fresh() { return location_name(next_++); }

    // Ensures later locations do not collide with `name`.
    void reserve(std::string_view name) {
        if (!is_location(name)) {
            return;
        }
        std::uint64_t value = 0;
        for (auto c : name.substr(1)) {
            if (!std::isdigit(static_cast<unsigned char>(c))) {
                return;
            }
            value = value * 10 + static_cast<std::uint64_t>(c - '0');
        }
        if (value >= next_) {
            next_ = value + 1;
        }
    }

    std::uint64_t next() const { return next_; }

private:
    std::uint64_t next_ = 0;
};

}  // namespace xrec
