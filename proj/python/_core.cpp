#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rss_sentinel/io.hpp"
#include "rss_sentinel/mkmmd.hpp"
#include "rss_sentinel/pipeline.hpp"

namespace py = pybind11;
using namespace rss_sentinel;

namespace {

PipelineConfig parse_config(const std::string& text) {
    return config_from_json(text.empty() ? config_to_json(default_config()) : io::json::parse(text));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Device-free intrusion detection over WLAN RSS with multi-kernel transfer.";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<RankError>(m, "RankError", PyExc_ValueError);

    m.def("default_config", [] { return config_to_json(default_config()).dump(); },
          "Default configuration as a JSON string.");

    m.def(
        "run_pipeline",
        [](const std::string& config_json, std::optional<std::uint64_t> seed) {
            PipelineConfig cfg = parse_config(config_json);
            if (seed) apply_master_seed(cfg, *seed);
            PipelineResult r;
            {
                py::gil_scoped_release release;
                r = run_pipeline(cfg);
            }
            py::dict out;
            out["report"] = io::report_to_json(r.report).dump();
            out["summary"] = summary_line(r.report);
            out["predictions"] = r.report.final_labels;
            out["fused_source"] = r.fused_source.values;
            out["fused_target"] = r.fused_target.values;
            return out;
        },
        py::arg("config_json") = "", py::arg("seed") = py::none(),
        "Run simulate, extract, fuse and detect; returns the report JSON, summary and arrays.");

    m.def("median_distance", [](const Eigen::MatrixXd& x) { return median_distance(x); }, py::arg("x"));

    m.def(
        "multi_gram",
        [](const Eigen::MatrixXd& source, const Eigen::MatrixXd& target, const std::string& gamma_mode) {
            return multi_gram(median_multi_kernel(source, gamma_mode_from_string(gamma_mode)), source, target).values;
        },
        py::arg("source"), py::arg("target"), py::arg("gamma_mode") = "calibrated",
        "Uniform five-kernel Gram over stacked source and target rows.");

    m.def(
        "mixed_mmd",
        [](const Eigen::MatrixXd& gram, const std::vector<int>& labels_s, const std::vector<int>& labels_t,
           int num_states) {
            const MixedMmd r = mixed_mmd(gram, labels_s, labels_t, num_states);
            return py::make_tuple(r.total, r.terms);
        },
        py::arg("gram"), py::arg("labels_s"), py::arg("labels_t"), py::arg("num_states"));

    m.def(
        "solve_transfer",
        [](const Eigen::MatrixXd& gram, Eigen::Index n_s, const Eigen::MatrixXd& l_total, double lambda, int d_sub) {
            const GramMatrix g{gram, n_s, gram.rows() - n_s};
            const TransferModel model = solve_transfer(g, l_total, lambda, d_sub);
            return py::make_tuple(model.W, model.eigenvalues);
        },
        py::arg("gram"), py::arg("n_s"), py::arg("l_total"), py::arg("lam") = kDefaultLambda,
        py::arg("d_sub") = kDefaultSubspaceDim, "Returns (W, z) with z ascending.");

    m.def(
        "build_L_total",
        [](const std::vector<int>& labels_s, const std::vector<int>& labels_t, int num_states) {
            return build_L_total(labels_s, labels_t, num_states);
        },
        py::arg("labels_s"), py::arg("labels_t"), py::arg("num_states"));

    m.def(
        "metrics",
        [](const std::vector<int>& truth, const std::vector<int>& predicted, int num_states) {
            const Metrics r = metrics(truth, predicted, num_states);
            py::dict out;
            out["fp"] = r.fp ? py::cast(*r.fp) : py::none();
            out["fn"] = r.fn ? py::cast(*r.fn) : py::none();
            out["da"] = r.da;
            out["confusion"] = r.confusion;
            return out;
        },
        py::arg("truth"), py::arg("predicted"), py::arg("num_states"));
}
