#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cmcs {

/// Privileged user data tracked across the mini-program / web-view boundary.
enum class SensitiveCategory : std::uint8_t {
  PhoneNumber,
  Nickname,
  Latitude,
  Longitude,
  Avatar,
  UserId,
};

inline constexpr std::array<SensitiveCategory, 6> kAllCategories = {
    SensitiveCategory::PhoneNumber, SensitiveCategory::Nickname,
    SensitiveCategory::Latitude,    SensitiveCategory::Longitude,
    SensitiveCategory::Avatar,      SensitiveCategory::UserId,
};

inline const char* to_string(SensitiveCategory c) {
  switch (c) {
    case SensitiveCategory::PhoneNumber: return "PhoneNumber";
    case SensitiveCategory::Nickname: return "Nickname";
    case SensitiveCategory::Latitude: return "Latitude";
    case SensitiveCategory::Longitude: return "Longitude";
    case SensitiveCategory::Avatar: return "Avatar";
    case SensitiveCategory::UserId: return "UserId";
  }
  return "?";
}

inline std::optional<SensitiveCategory> parse_category(std::string_view name) {
  for (auto c : kAllCategories)
    if (name == to_string(c)) return c;
  return std::nullopt;
}

/// Small value-type set over SensitiveCategory, stored as a bitmask.
class CategorySet {
 public:
  constexpr CategorySet() = default;
  constexpr CategorySet(std::initializer_list<SensitiveCategory> cats) {
    for (auto c : cats) insert(c);
  }

  static constexpr CategorySet from_bits(std::uint8_t bits) {
    CategorySet s;
    s.bits_ = bits & 0x3F;
    return s;
  }

  constexpr void insert(SensitiveCategory c) {
    bits_ |= static_cast<std::uint8_t>(1u << static_cast<unsigned>(c));
  }
  constexpr bool contains(SensitiveCategory c) const {
    return bits_ & (1u << static_cast<unsigned>(c));
  }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr std::size_t size() const {
    std::size_t n = 0;
    for (auto b = bits_; b; b &= static_cast<std::uint8_t>(b - 1)) ++n;
    return n;
  }
  constexpr std::uint8_t bits() const { return bits_; }

  constexpr CategorySet& operator|=(CategorySet o) {
    bits_ |= o.bits_;
    return *this;
  }
  friend constexpr CategorySet operator|(CategorySet a, CategorySet b) {
    return from_bits(a.bits_ | b.bits_);
  }
  friend constexpr CategorySet operator&(CategorySet a, CategorySet b) {
    return from_bits(a.bits_ & b.bits_);
  }
  constexpr bool is_subset_of(CategorySet o) const {
    return (bits_ & ~o.bits_) == 0;
  }

  std::vector<SensitiveCategory> items() const {
    std::vector<SensitiveCategory> out;
    for (auto c : kAllCategories)
      if (contains(c)) out.push_back(c);
    return out;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (auto c : items()) out.emplace_back(cmcs::to_string(c));
    return out;
  }

  /// "PhoneNumber;Avatar" (canonical enum order); empty string when empty.
  std::string to_string() const {
    std::string out;
    for (auto c : items()) {
      if (!out.empty()) out += ';';
      out += cmcs::to_string(c);
    }
    return out;
  }

  auto operator<=>(const CategorySet&) const = default;

 private:
  std::uint8_t bits_ = 0;
};

}  // namespace cmcs
