#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace arec {

using Index = std::uint32_t;

// Bijection between string identifiers and dense indices 0..size()-1.
class Interner {
public:
    Interner() = default;

    // Builds an interner whose indices follow the lexicographic order of `names`.
    // Duplicates are collapsed.
    static Interner sorted(std::vector<std::string> names);

    // Returns the existing index or appends a new one.
    Index intern(std::string_view name);

    std::optional<Index> find(std::string_view name) const;
    bool contains(std::string_view name) const { return find(name).has_value(); }

    // Throws std::out_of_range for unknown names.
    Index at(std::string_view name) const;

    const std::string& name(Index i) const { return names_.at(i); }
    const std::vector<std::string>& names() const { return names_; }
    std::size_t size() const { return names_.size(); }
    bool empty() const { return names_.empty(); }

    friend bool operator==(const Interner& a, const Interner& b) { return a.names_ == b.names_; }

private:
    struct Hash {
        using is_transparent = void;
        std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
    };
    std::vector<std::string> names_;
    std::unordered_map<std::string, Index, Hash, std::equal_to<>> index_;
};

}  // namespace arec
