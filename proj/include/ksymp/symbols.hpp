#ifndef KSYMP_SYMBOLS_HPP
#define KSYMP_SYMBOLS_HPP

#include <cstdint>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

namespace ksymp {

using SymId = std::uint32_t;
using VarId = std::uint32_t; // indeterminate id: symbol or interned function atom

enum class SymKind : std::uint8_t {
    Coordinate, // base coordinate q^i
    Velocity,   // v^i_alpha
    Parameter,  // declared parameter or solver-created unknown
    FunctionHead, // head of a formal function atom
};

struct SymbolInfo {
    std::string name;
    SymKind kind = SymKind::Parameter;
    int coord_index = 0; // 1-based i for coordinates and velocities
    int direction = 0;   // 1-based alpha for velocities
};

// A formal function application: head applied to argument symbols, carrying a
// multi-index of formal partial derivatives (one count per argument slot).
struct AtomInfo {
    SymId head = 0;
    std::vector<SymId> args;
    std::vector<std::uint16_t> multi; // same length as args
};

// Names, velocity metadata and interned function atoms. Indeterminate ids
// are symbols first, atoms after kAtomBase. The atom registry is mutable and
// lock-guarded: differentiation creates fresh formal-derivative atoms.
class SymbolTable {
public:
    static constexpr VarId kAtomBase = 1u << 24;

    SymId add_symbol(const std::string& name, SymKind kind, int ci = 0, int dir = 0) {
        if (by_name_.count(name))
            throw std::invalid_argument("symbol '" + name + "' already declared");
        if (name.empty()) throw std::invalid_argument("empty symbol name");
        SymId id = static_cast<SymId>(symbols_.size());
        symbols_.push_back({name, kind, ci, dir});
        by_name_[name] = id;
        return id;
    }

    bool has_symbol(const std::string& name) const { return by_name_.count(name) != 0; }

    SymId symbol(const std::string& name) const {
        auto it = by_name_.find(name);
        if (it == by_name_.end()) throw std::invalid_argument("unknown identifier '" + name + "'");
        return it->second;
    }

    const SymbolInfo& info(SymId s) const { return symbols_.at(s); }
    std::size_t symbol_count() const { return symbols_.size(); }

    VarId intern_atom(SymId head, std::vector<SymId> args, std::vector<std::uint16_t> multi) const {
        if (multi.size() != args.size())
            throw std::invalid_argument("atom multi-index length mismatch");
        std::lock_guard<std::mutex> lk(atom_mutex_);
        AtomKey key{head, args, multi};
        auto it = atom_ids_.find(key);
        if (it != atom_ids_.end()) return it->second;
        VarId id = kAtomBase + static_cast<VarId>(atoms_.size());
        atoms_.push_back({head, std::move(args), std::move(multi)});
        atom_ids_.emplace(std::move(key), id);
        return id;
    }

    static bool is_atom(VarId v) { return v >= kAtomBase; }

    const AtomInfo& atom(VarId v) const {
        std::lock_guard<std::mutex> lk(atom_mutex_);
        return atoms_.at(v - kAtomBase);
    }

    // Derivative atom: bump the multi-index at the slot of symbol s.
    VarId atom_derivative(VarId v, SymId s) const {
        AtomInfo a = atom(v);
        for (std::size_t i = 0; i < a.args.size(); ++i) {
            if (a.args[i] == s) {
                a.multi[i] += 1;
                return intern_atom(a.head, a.args, a.multi);
            }
        }
        throw std::logic_error("atom_derivative: symbol is not an argument");
    }

    bool atom_depends_on(VarId v, SymId s) const {
        const AtomInfo a = atom(v);
        for (SymId x : a.args)
            if (x == s) return true;
        return false;
    }

    std::string var_name(VarId v) const;

private:
    struct AtomKey {
        SymId head;
        std::vector<SymId> args;
        std::vector<std::uint16_t> multi;
        bool operator<(const AtomKey& o) const {
            if (head != o.head) return head < o.head;
            if (args != o.args) return args < o.args;
            return multi < o.multi;
        }
    };

    std::vector<SymbolInfo> symbols_;
    std::map<std::string, SymId> by_name_;

    mutable std::mutex atom_mutex_;
    mutable std::vector<AtomInfo> atoms_;
    mutable std::map<AtomKey, VarId> atom_ids_;
};

inline std::string SymbolTable::var_name(VarId v) const {
    if (!is_atom(v)) {
        const SymbolInfo& s = info(v);
        if (s.kind == SymKind::Velocity) {
            // velocities print with the owning coordinate's name
            for (const auto& t : symbols_)
                if (t.kind == SymKind::Coordinate && t.coord_index == s.coord_index)
                    return "v[" + t.name + "," + std::to_string(s.direction) + "]";
            return s.name;
        }
        return s.name;
    }
    const AtomInfo a = atom(v);
    std::string out;
    bool derived = false;
    for (auto m : a.multi)
        if (m) derived = true;
    if (derived) {
        out += "D[";
        for (std::size_t i = 0; i < a.multi.size(); ++i) {
            if (i) out += ",";
            out += std::to_string(a.multi[i]);
        }
        out += "]";
    }
    out += info(a.head).name;
    if (!a.args.empty() || derived) {
        out += "(";
        for (std::size_t i = 0; i < a.args.size(); ++i) {
            if (i) out += ",";
            out += var_name(a.args[i]);
        }
        out += ")";
    }
    return out;
}

} // namespace ksymp

#endif // KSYMP_SYMBOLS_HPP
