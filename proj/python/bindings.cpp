#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <variant>

#include "bmm/analysis.hpp"
#include "bmm/datagen.hpp"
#include "bmm/estimators.hpp"
#include "bmm/matrix.hpp"
#include "bmm/plan.hpp"
#include "bmm/plan_io.hpp"

namespace py = pybind11;
using namespace bmm;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

DenseMatrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw DimensionError("expected a 2-d array");
  const auto r = static_cast<std::size_t>(a.shape(0));
  const auto c = static_cast<std::size_t>(a.shape(1));
  return DenseMatrix(r, c, std::vector<double>(a.data(), a.data() + r * c));
}

py::array_t<double> to_array(const DenseMatrix& m) {
  py::array_t<double> out({m.rows(), m.cols()});
  std::copy(m.values().begin(), m.values().end(), out.mutable_data());
  return out;
}

// Blocks are given either as a count K (equal blocks) or as a list of sizes.
using Blocks = std::variant<std::size_t, std::vector<std::size_t>>;

BlockPartition to_partition(const Blocks& b, std::size_t n) {
  if (const auto* k = std::get_if<std::size_t>(&b)) return BlockPartition::equal(n, *k);
  BlockPartition part(std::get<std::vector<std::size_t>>(b));
  if (part.total() != n) throw DimensionError("block sizes do not sum to the inner dimension");
  return part;
}

py::dict sketch_dict(const SketchResult& r) {
  py::dict d;
  d["product"] = to_array(r.product);
  d["C"] = to_array(r.sketch.C);
  d["D"] = to_array(r.sketch.D);
  d["block_offsets"] = r.sketch.block_offsets;
  return d;
}

SamplingPlan make_plan(const std::string& method, const DenseMatrix& M, const DenseMatrix& N, const Blocks& blocks,
                       std::size_t c, std::size_t c0, std::uint64_t seed, bool cap) {
  const auto part = to_partition(blocks, M.cols());
  AllocationOptions opts;
  opts.cap_to_block_size = cap;
  switch (parse_method(method)) {
    case Method::kOPL: return allocate_opl(M, N, part, c, opts);
    case Method::kONC: return allocate_onc(M, N, part, c, opts);
    case Method::kUU: return allocate_uniform(part, c, opts);
    case Method::kONU: {
      auto plan = allocate_twostep(M, N, part, c, c0, uniform_probabilities(part), seed, opts);
      plan.method = Method::kONU;
      return plan;
    }
    case Method::kONMCNR: return allocate_twostep(M, N, part, c, c0, optimal_probabilities(M, N, part), seed, opts);
    case Method::kSSM: break;
  }
  throw std::invalid_argument("SSM has no per-block plan; use ssm_estimate");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Block-wise randomized matrix multiplication";

  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);

  py::class_<SamplingPlan>(m, "SamplingPlan")
      .def_property_readonly("method", [](const SamplingPlan& p) { return std::string(method_name(p.method)); })
      .def_property_readonly("block_sizes", [](const SamplingPlan& p) { return p.partition.sizes(); })
      .def_property_readonly("probabilities", [](const SamplingPlan& p) { return p.probs.blocks; })
      .def_readonly("budgets", &SamplingPlan::budgets)
      .def_readonly("real_budgets", &SamplingPlan::real_budgets)
      .def_readonly("weights", &SamplingPlan::weights)
      .def_readonly("total", &SamplingPlan::total)
      .def_readonly("fallback", &SamplingPlan::fallback)
      .def("to_json", [](const SamplingPlan& p) { return plan_to_json(p).dump(); })
      .def("__repr__", [](const SamplingPlan& p) {
        return "<SamplingPlan " + std::string(method_name(p.method)) + " K=" + std::to_string(p.num_blocks()) +
               " c=" + std::to_string(p.total) + ">";
      });

  m.def("plan_from_json", [](const std::string& text) { return plan_from_json(nlohmann::json::parse(text)); });

  m.def("multiply_exact", [](const Array& a, const Array& b) { return to_array(multiply_exact(to_matrix(a), to_matrix(b))); });
  m.def("column_norms", [](const Array& a) { return column_norms(to_matrix(a)); });
  m.def("row_norms", [](const Array& a) { return row_norms(to_matrix(a)); });
  m.def("frobenius_norm", [](const Array& a) { return frobenius_norm(to_matrix(a)); });
  m.def("relative_error", [](const Array& approx, const Array& exact) {
    return relative_error(to_matrix(approx), to_matrix(exact));
  });

  m.def(
      "optimal_probabilities",
      [](const Array& a, const Array& b, const Blocks& blocks) {
        const auto M = to_matrix(a);
        return optimal_probabilities(M, to_matrix(b), to_partition(blocks, M.cols())).blocks;
      },
      py::arg("M"), py::arg("N"), py::arg("blocks"));
  m.def(
      "integerize",
      [](const std::vector<double>& w, std::size_t c, std::vector<std::size_t> caps, bool floor_nonzero) {
        IntegerizeOptions opts;
        opts.caps = std::move(caps);
        opts.floor_nonzero = floor_nonzero;
        return integerize(w, c, opts).counts;
      },
      py::arg("weights"), py::arg("c"), py::arg("caps") = std::vector<std::size_t>{}, py::arg("floor_nonzero") = true);

  m.def(
      "make_plan",
      [](const std::string& method, const Array& a, const Array& b, const Blocks& blocks, std::size_t c,
         std::size_t c0, std::uint64_t seed, bool cap) {
        return make_plan(method, to_matrix(a), to_matrix(b), blocks, c, c0, seed, cap);
      },
      py::arg("method"), py::arg("M"), py::arg("N"), py::arg("blocks"), py::arg("c"), py::arg("c0") = 0,
      py::arg("seed") = 1, py::arg("cap_to_block_size") = true);

  m.def(
      "sabmm",
      [](const Array& a, const Array& b, const SamplingPlan& plan, std::uint64_t seed) {
        return sketch_dict(sabmm(to_matrix(a), to_matrix(b), plan, seed));
      },
      py::arg("M"), py::arg("N"), py::arg("plan"), py::arg("seed"));
  m.def(
      "ssm_estimate",
      [](const Array& a, const Array& b, const Blocks& blocks, std::size_t draws, std::uint64_t seed) {
        const auto M = to_matrix(a);
        return sketch_dict(ssm_estimate(M, to_matrix(b), to_partition(blocks, M.cols()), draws, seed));
      },
      py::arg("M"), py::arg("N"), py::arg("blocks"), py::arg("draws"), py::arg("seed"));

  m.def(
      "elementwise_variance",
      [](const Array& a, const Array& b, const SamplingPlan& plan) {
        return to_array(elementwise_variance(to_matrix(a), to_matrix(b), plan));
      },
      py::arg("M"), py::arg("N"), py::arg("plan"));
  m.def(
      "expected_sq_error",
      [](const Array& a, const Array& b, const SamplingPlan& plan) {
        return expected_sq_error(to_matrix(a), to_matrix(b), plan);
      },
      py::arg("M"), py::arg("N"), py::arg("plan"));
  m.def(
      "optimal_objective",
      [](const Array& a, const Array& b, const Blocks& blocks, double c) {
        const auto M = to_matrix(a);
        return optimal_objective(M, to_matrix(b), to_partition(blocks, M.cols()), c);
      },
      py::arg("M"), py::arg("N"), py::arg("blocks"), py::arg("c"));

  m.def(
      "bounds",
      [](const Array& a, const Array& b, const SamplingPlan& plan, double delta) {
        const auto M = to_matrix(a);
        const auto N = to_matrix(b);
        const auto in = bound_inputs_for(M, N, plan, delta);
        py::dict d;
        const auto put = [&](const char* key, const Bound& bd) {
          py::dict e;
          e["available"] = bd.available;
          e["variance_bound"] = bd.variance_bound;
          e["error_bound"] = bd.error_bound;
          e["diagnostic"] = bd.diagnostic;
          d[key] = e;
        };
        d["beta"] = in.beta;
        put("optimal_sizes", bound_thm33(in));
        put("norm_sum_sizes", bound_thm42(in));
        put("two_step_sizes", bound_thm44(in));
        return d;
      },
      py::arg("M"), py::arg("N"), py::arg("plan"), py::arg("delta") = 0.1);

  m.def(
      "generate",
      [](const std::string& which, std::size_t rows, std::size_t inner, std::size_t cols, std::uint64_t seed) {
        const auto inst = generate(parse_case(which), rows, inner, cols, seed);
        return py::make_tuple(to_array(inst.M), to_array(inst.N));
      },
      py::arg("case"), py::arg("m"), py::arg("n"), py::arg("p"), py::arg("seed"));
}
