//
// Project rxncond
// SPDX-License-Identifier: Apache-2.0
//

#include <array>
#include <string_view>

#include "rxncond/smiles.hpp"

namespace rxncond {
namespace {

constexpr std::array<std::string_view, 119> kSymbols = {
  "*",  "H",  "He", "Li", "Be", "B",  "C",  "N",  "O",  "F",  "Ne", "Na",
  "Mg", "Al", "Si", "P",  "S",  "Cl", "Ar", "K",  "Ca", "Sc", "Ti", "V",
  "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As", "Se", "Br",
  "Kr", "Rb", "Sr", "Y",  "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag",
  "Cd", "In", "Sn", "Sb", "Te", "I",  "Xe", "Cs", "Ba", "La", "Ce", "Pr",
  "Nd", "Pm", "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu",
  "Hf", "Ta", "W",  "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl", "Pb", "Bi",
  "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa", "U",  "Np", "Pu", "Am",
  "Cm", "Bk", "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh",
  "Hs", "Mt", "Ds", "Rg", "Cn", "Nh", "Fl", "Mc", "Lv", "Ts", "Og",
};

}  // namespace

int atomic_number(std::string_view symbol) {
  for (std::size_t z = 0; z < kSymbols.size(); ++z) {
    if (kSymbols[z] == symbol)
      return static_cast<int>(z);
  }
  return -1;
}

std::string_view element_symbol(int atomic_number) {
  if (atomic_number < 0 || atomic_number >= static_cast<int>(kSymbols.size()))
    return "?";
  return kSymbols[static_cast<std::size_t>(atomic_number)];
}

}  // namespace rxncond
