#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "evofuzz/api_target.hpp"
#include "evofuzz/bandit.hpp"
#include "evofuzz/corpus.hpp"
#include "evofuzz/engine.hpp"
#include "evofuzz/fitness.hpp"
#include "evofuzz/genbackend.hpp"
#include "evofuzz/oracle.hpp"
#include "evofuzz/pyast.hpp"
#include "evofuzz/seedgen.hpp"

namespace py = pybind11;
using namespace evofuzz;

namespace {

std::vector<std::string> prefixes_for(const std::string& api) {
  return library_prefixes(ApiTarget::make(api));
}

py::object parse_check(const std::string& source) {
  auto err = pyast::parse_check(source);
  if (!err) return py::none();
  return py::make_tuple(err->line, err->column, err->message);
}

std::string compare_reports(const std::string& cpu_jsonl, const std::string& accel_jsonl, double rtol,
                            double atol) {
  oracle::ToleranceSpec tol{rtol, atol};
  tol.validate();
  auto cpu = oracle::parse_report(cpu_jsonl, "cpu");
  auto accel = oracle::parse_report(accel_jsonl, "accelerator");
  return oracle::to_json(oracle::compare(cpu, accel, tol)).dump();
}

std::string static_campaign(const std::string& api, const std::string& signature, const std::string& fixtures,
                            std::uint64_t iterations, std::uint64_t rng_seed) {
  auto target = ApiTarget::make(api, signature);
  genbackend::MockOptions options{"None", true};
  auto backend = fixtures.empty() ? genbackend::MockBackend(options)
                                  : genbackend::MockBackend::from_directory(fixtures, options);
  engine::CampaignConfig config;
  config.mode = engine::Mode::kStaticOnly;
  config.max_iterations = iterations;
  config.budget_per_api = std::chrono::minutes(10);
  config.rng_seed = rng_seed;
  return engine::to_json(engine::run_campaign(target, config, backend, nullptr)).dump();
}

}  // namespace

PYBIND11_MODULE(_evofuzz, m) {
  m.doc() = "Native core of the evofuzz library fuzzer";

  py::class_<FitnessScore>(m, "FitnessScore")
      .def_readonly("depth", &FitnessScore::depth)
      .def_readonly("unique_calls", &FitnessScore::unique_calls)
      .def_readonly("repeats", &FitnessScore::repeats)
      .def_readonly("total", &FitnessScore::total)
      .def("__eq__", [](const FitnessScore& a, const FitnessScore& b) { return a == b; })
      .def("__repr__", [](const FitnessScore& s) {
        return "FitnessScore(depth=" + std::to_string(s.depth) + ", unique_calls=" +
               std::to_string(s.unique_calls) + ", repeats=" + std::to_string(s.repeats) +
               ", total=" + std::to_string(s.total) + ")";
      });

  m.def("fitness", [](const std::string& source, const std::string& api) {
        return fitness::score(source, prefixes_for(api));
      },
      py::arg("source"), py::arg("api"),
      "Dataflow depth plus unique library calls minus repeated calls.");

  m.def("parse_check", &parse_check, py::arg("source"),
        "None when the source parses, else (line, column, message) of the first error.");
  m.def("trim_to_parse", [](const std::string& s) { return pyast::trim_to_parse(s); }, py::arg("source"));
  m.def("remove_prints", [](const std::string& s) { return pyast::remove_prints(s); }, py::arg("source"));
  m.def("eliminate_dead_code",
        [](const std::string& s, const std::string& api) {
          return pyast::eliminate_dead_code(s, ApiTarget::make(api));
        },
        py::arg("source"), py::arg("api"));
  m.def("find_calls",
        [](const std::string& source, const std::string& api) {
          std::vector<std::string> callees;
          for (const auto& site : pyast::find_calls(source, prefixes_for(api))) callees.push_back(site.callee);
          return callees;
        },
        py::arg("source"), py::arg("api"), "Dotted names of library calls in source order.");

  m.def("normalize", [](const std::string& s) { return corpus::normalize(s); }, py::arg("source"));
  m.def("norm_hash", [](const std::string& s) { return corpus::norm_hash(s); }, py::arg("source"));

  m.def("build_prompt",
        [](const std::string& api, const std::string& signature) {
          return seedgen::build_prompt(ApiTarget::make(api, signature));
        },
        py::arg("api"), py::arg("signature") = "");

  m.def("values_close",
        [](double x, double y, double rtol, double atol) {
          return oracle::values_close(x, y, oracle::ToleranceSpec{rtol, atol});
        },
        py::arg("x"), py::arg("y"), py::arg("rtol") = 1e-3, py::arg("atol") = 1e-6);
  m.def("_compare_reports", &compare_reports, py::arg("cpu"), py::arg("accelerator"), py::arg("rtol"),
        py::arg("atol"));
  m.def("_static_campaign", &static_campaign, py::arg("api"), py::arg("signature"), py::arg("fixtures"),
        py::arg("iterations"), py::arg("rng_seed"), py::call_guard<py::gil_scoped_release>());

  py::class_<Rng>(m, "Rng")
      .def(py::init<std::uint64_t>(), py::arg("seed") = 0)
      .def("uniform", &Rng::uniform)
      .def("beta", &Rng::beta, py::arg("a"), py::arg("b"));

  py::class_<bandit::BetaBernoulliBandit>(m, "Bandit")
      .def(py::init<std::size_t>(), py::arg("arms"))
      .def("__len__", &bandit::BetaBernoulliBandit::size)
      .def("select", &bandit::BetaBernoulliBandit::select, py::arg("rng"))
      .def("update", &bandit::BetaBernoulliBandit::update, py::arg("arm"), py::arg("successes"),
           py::arg("failures"))
      .def("posterior", [](const bandit::BetaBernoulliBandit& b, std::size_t arm) {
        const auto& s = b.arm(arm);
        return py::make_tuple(s.successes, s.failures);
      })
      .def("pulls", [](const bandit::BetaBernoulliBandit& b, std::size_t arm) { return b.arm(arm).pulls; });

  py::register_exception<InvalidTarget>(m, "InvalidTarget", PyExc_ValueError);
}
