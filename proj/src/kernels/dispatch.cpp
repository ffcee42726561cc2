#include <atomic>
#include <cstdlib>
#include <string>

#include "agst/kernels.hpp"
#include "agst/matrix.hpp"

namespace agst::kernels {
namespace {

Isa best_isa() {
  if (const char* forced = std::getenv("AGST_ISA"); forced != nullptr && *forced != '\0') {
    const Isa isa = parse_isa(forced);
    if (isa_supported(isa)) return isa;
  }
  return isa_supported(Isa::Avx2) ? Isa::Avx2 : Isa::Scalar;
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{&table_for(best_isa())};
  return table;
}

}  // namespace

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if defined(__x86_64__) || defined(_M_X64)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

std::vector<Isa> supported_isas() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::Scalar, Isa::Avx2})
    if (isa_supported(isa)) out.push_back(isa);
  return out;
}

const KernelTable& table_for(Isa isa) {
  if (!isa_supported(isa)) throw Error("kernel ISA not supported on this CPU: " + std::string(isa_name(isa)));
#if defined(__x86_64__) || defined(_M_X64)
  if (isa == Isa::Avx2) return avx2_table();
#endif
  return scalar_table();
}

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

void select(Isa isa) { current().store(&table_for(isa), std::memory_order_release); }

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return "scalar";
    case Isa::Avx2:
      return "avx2";
  }
  return "unknown";
}

Isa parse_isa(std::string_view name) {
  if (name == "scalar") return Isa::Scalar;
  if (name == "avx2") return Isa::Avx2;
  throw Error("unknown kernel ISA '" + std::string(name) + "' (expected scalar or avx2)");
}

}  // namespace agst::kernels
