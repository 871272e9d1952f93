#pragma once

// Detect-then-correct handling of CiM decision errors. Every CiM access
// also produces the XOR of the two stored codewords; because the code is
// linear that XOR must itself be a codeword, so decoding it reveals which
// columns were mis-sensed.

#include <cstdint>

#include "sttcim/array.hpp"
#include "sttcim/ecc.hpp"

namespace sttcim::ecc {

struct FlowResult {
  array::WordResult result;
  unsigned accesses_used = 1;
  DecodeStatus check = DecodeStatus::Clean;
  unsigned corrected_columns = 0;
  bool near_memory = false;  ///< result recomputed from two corrected reads

  bool hard_error() const { return check == DecodeStatus::DetectedUncorrectable; }
};

/// Near-memory fallback: both operands read through the ordinary ECC path
/// and the operation recomputed beside the array. Costs two extra accesses.
inline array::WordResult near_memory_recompute(array::CimArray& arr, Address a, Address b, array::CimOp op) {
  const DecodeOutcome da = arr.peek(a), db = arr.peek(b);
  if (!da.ok() || !db.ok()) throw Error("operand uncorrectable during near-memory correction");
  arr.ledger().charge(energy::OpKind::NmCorrection);
  const auto& code = arr.code();
  array::WordResult r =
      array::compute(op, code.encode(da.data), code.encode(db.data), code.data_bits(), code.code_bits());
  r.accesses_used = 3;
  return r;
}

/// Checks one sensed CiM result and corrects it where needed. Hard errors
/// are reported in the result, not thrown.
inline FlowResult check_and_correct(array::CimArray& arr, Address a, Address b, array::CimOp op,
                                    const array::WordResult& sensed) {
  using array::CimOp;
  FlowResult f;
  f.result = sensed;
  const CodeSpec& code = arr.code();
  const DecodeOutcome chk = cim_xor_check(code, f.result.xor_sideband);
  f.check = chk.status;
  f.corrected_columns = chk.corrected;
  if (chk.status == DecodeStatus::Clean || chk.status == DecodeStatus::DetectedUncorrectable) return f;

  const Word data_fix = static_cast<Word>(chk.error_mask & low_mask(code.data_bits()));
  if (op == CimOp::Xor) {
    f.result.value ^= data_fix;
    f.result.output ^= chk.error_mask;
    f.result.xor_sideband = chk.codeword;
  } else if (op == CimOp::Read || op == CimOp::Not) {
    // Single-row sensing: the sideband is the sensed stored word itself, so
    // decoding it corrects the read directly.
    f.result.xor_sideband = chk.codeword;
    f.result.value = op == CimOp::Read ? chk.data : static_cast<Word>(~chk.data & low_mask(code.data_bits()));
    f.result.output = op == CimOp::Read ? chk.codeword : (~chk.codeword & code.codeword_mask());
  } else {
    f.result = near_memory_recompute(arr, a, b, op);
    f.accesses_used = 3;
    f.near_memory = true;
  }
  f.result.accesses_used = f.accesses_used;
  return f;
}

template <array::Sensor S>
FlowResult cim_error_flow(array::CimArray& arr, Address a, Address b, array::CimOp op, S& sensor) {
  return check_and_correct(arr, a, b, op, arr.cim_word_noisy(a, b, op, sensor));
}

/// Error-free (functional) sensing through the same flow.
inline FlowResult cim_error_flow(array::CimArray& arr, Address a, Address b, array::CimOp op) {
  return check_and_correct(arr, a, b, op, arr.cim_word(a, b, op));
}

struct VcimFlowResult {
  std::uint64_t value = 0;
  unsigned accesses_used = 1;
  unsigned corrected_lanes = 0;
  unsigned near_memory_lanes = 0;
  bool hard_error = false;
};

/// Vector CiM with a per-lane check. XOR lanes are fixed in place; other
/// lanes fall back to near-memory recomputation (two accesses each).
template <array::Sensor S>
VcimFlowResult vcim_error_flow(array::CimArray& arr, Address a, Address b, array::CimOp op, array::ReduceKind reduce,
                               unsigned lanes, S& sensor) {
  array::VcimResult v = arr.vcim_noisy(a, b, op, reduce, lanes, sensor);
  const CodeSpec& code = arr.code();
  VcimFlowResult f;
  for (unsigned k = 0; k < lanes; ++k) {
    array::WordResult& lane = v.lanes[k];
    const DecodeOutcome chk = cim_xor_check(code, lane.xor_sideband);
    if (chk.status == DecodeStatus::Clean) continue;
    if (chk.status == DecodeStatus::DetectedUncorrectable) {
      f.hard_error = true;
      continue;
    }
    ++f.corrected_lanes;
    if (op == array::CimOp::Xor) {
      lane.value ^= static_cast<Word>(chk.error_mask & low_mask(code.data_bits()));
    } else {
      lane = near_memory_recompute(arr, a + k, b + k, op);
      ++f.near_memory_lanes;
    }
  }
  f.value = arr.reduce(v.lanes, op, reduce);
  f.accesses_used = 1 + 2 * f.near_memory_lanes;
  return f;
}

inline VcimFlowResult vcim_error_flow(array::CimArray& arr, Address a, Address b, array::CimOp op,
                                      array::ReduceKind reduce, unsigned lanes) {
  const array::VcimResult v = arr.vcim(a, b, op, reduce, lanes);
  VcimFlowResult f;
  f.value = v.value;
  for (const auto& lane : v.lanes) {
    if (!cim_xor_check(arr.code(), lane.xor_sideband).ok()) f.hard_error = true;
  }
  return f;
}

}  // namespace sttcim::ecc
