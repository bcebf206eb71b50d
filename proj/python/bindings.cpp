// Python bindings for the AMD pipeline: the low-level numeric operations on
// numpy arrays plus the end-to-end commands. Report-producing calls return
// JSON strings; the package wrapper parses them into dicts.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <string>
#include <vector>

#include "amd/evaluation.hpp"
#include "amd/losses.hpp"
#include "amd/pipeline.hpp"
#include "amd/tensor.hpp"
#include "amd/training.hpp"

namespace py = pybind11;

namespace {

amd::Tensor tensor_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
    std::vector<int> shape;
    for (py::ssize_t i = 0; i < arr.ndim(); ++i)
        shape.push_back(static_cast<int>(arr.shape(i)));
    std::vector<double> values(arr.data(), arr.data() + arr.size());
    return amd::Tensor::from_values(std::move(shape), std::move(values));
}

py::array_t<double> array_from_tensor(const amd::Tensor& t) {
    std::vector<py::ssize_t> shape;
    for (int d : t.shape()) shape.push_back(d);
    py::array_t<double> out(shape);
    std::copy(t.values().begin(), t.values().end(), out.mutable_data());
    return out;
}

std::vector<amd::Tensor> scalars_from(const std::vector<double>& values) {
    std::vector<amd::Tensor> out;
    out.reserve(values.size());
    for (double v : values) out.push_back(amd::Tensor::scalar(v));
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Attribute-guided metric distillation: C++ core operations";

    py::register_exception<amd::ConfigError>(m, "AmdConfigError", PyExc_ValueError);
    py::register_exception<amd::DataError>(m, "AmdDataError", PyExc_IOError);
    py::register_exception<amd::StateError>(m, "AmdStateError", PyExc_RuntimeError);

    using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

    m.def(
        "pepu",
        [](const DoubleArray& x, double kappa, double tau) {
            return array_from_tensor(amd::pepu(tensor_from_array(x), kappa, tau));
        },
        py::arg("x"), py::arg("kappa"), py::arg("tau"));

    m.def(
        "generalized_mean_pool",
        [](const DoubleArray& map, double p) {
            return array_from_tensor(amd::generalized_mean_pool(tensor_from_array(map), p));
        },
        py::arg("map"), py::arg("p"));

    m.def(
        "conv2d",
        [](const DoubleArray& input, const DoubleArray& kernel, int stride, int padding) {
            return array_from_tensor(
                amd::conv2d(tensor_from_array(input), tensor_from_array(kernel), stride, padding));
        },
        py::arg("input"), py::arg("kernel"), py::arg("stride") = 1, py::arg("padding") = 0);

    m.def(
        "elementwise_mask",
        [](const DoubleArray& F, const DoubleArray& A) {
            return array_from_tensor(
                amd::elementwise_mask(tensor_from_array(F), tensor_from_array(A)));
        },
        py::arg("feature_map"), py::arg("attention"));

    m.def(
        "l2_normalize_and_distance",
        [](const DoubleArray& u, const DoubleArray& v) {
            return amd::l2_normalize_and_distance(tensor_from_array(u), tensor_from_array(v)).item();
        },
        py::arg("u"), py::arg("v"));

    m.def(
        "euclidean_distance",
        [](const DoubleArray& u, const DoubleArray& v) {
            return amd::euclidean_distance(tensor_from_array(u), tensor_from_array(v)).item();
        },
        py::arg("u"), py::arg("v"));

    m.def("pairwise_xor", &amd::pairwise_xor, py::arg("a_i"), py::arg("a_j"));

    m.def("lambda_bound", &amd::lambda_bound, py::arg("m"), py::arg("m_e"), py::arg("upsilon"),
          "Returns (lambda, common bound)");

    m.def(
        "metric_distillation_loss",
        [](double d, const std::vector<double>& components) {
            return amd::metric_distillation_loss(d, scalars_from(components)).item();
        },
        py::arg("d"), py::arg("components"));

    m.def(
        "total_loss",
        [](double d, const std::vector<double>& components, const std::vector<std::uint8_t>& a_ij,
           double alpha, double beta, double upsilon) {
            amd::LossConfig cfg;
            cfg.alpha = alpha;
            cfg.beta = beta;
            cfg.upsilon = upsilon;
            return amd::total_loss(d, scalars_from(components), a_ij, cfg).to_json().dump();
        },
        py::arg("d"), py::arg("components"), py::arg("a_ij"), py::arg("alpha") = 10.0,
        py::arg("beta") = 50.0, py::arg("upsilon") = 0.5);

    m.def(
        "warmup_lr",
        [](int epoch, int epochs, int warmup_epochs, double base_lr, double warmup_start_lr) {
            amd::TrainSchedule s;
            s.epochs = epochs;
            s.warmup_epochs = warmup_epochs;
            s.base_lr = base_lr;
            s.warmup_start_lr = warmup_start_lr;
            return amd::warmup_lr(epoch, s);
        },
        py::arg("epoch"), py::arg("epochs") = 30, py::arg("warmup_epochs") = 10,
        py::arg("base_lr") = 1e-4, py::arg("warmup_start_lr") = 1e-6);

    py::class_<amd::RunConfig>(m, "RunConfig")
        .def(py::init<>())
        .def_readwrite("data_dir", &amd::RunConfig::data_dir)
        .def_readwrite("out_dir", &amd::RunConfig::out_dir)
        .def_readwrite("seed", &amd::RunConfig::seed)
        .def_readwrite("n_ids", &amd::RunConfig::n_ids)
        .def_readwrite("images_per_id", &amd::RunConfig::images_per_id)
        .def_readwrite("n_cameras", &amd::RunConfig::n_cameras)
        .def_readwrite("test_fraction", &amd::RunConfig::test_fraction)
        .def_readwrite("attribute_count", &amd::RunConfig::attribute_count)
        .def_readwrite("export_ppm", &amd::RunConfig::export_ppm)
        .def_readwrite("target_epochs", &amd::RunConfig::target_epochs)
        .def_readwrite("target_lr", &amd::RunConfig::target_lr)
        .def_readwrite("triplet_margin", &amd::RunConfig::triplet_margin)
        .def_readwrite("gmp_power", &amd::RunConfig::gmp_power)
        .def_readwrite("n_shared", &amd::RunConfig::n_shared)
        .def_readwrite("kappa", &amd::RunConfig::kappa)
        .def_readwrite("tau", &amd::RunConfig::tau)
        .def_readwrite("p_ids", &amd::RunConfig::p_ids)
        .def_readwrite("s_samples", &amd::RunConfig::s_samples)
        .def_readwrite("epochs", &amd::RunConfig::epochs)
        .def_readwrite("warmup_epochs", &amd::RunConfig::warmup_epochs)
        .def_readwrite("base_lr", &amd::RunConfig::base_lr)
        .def_readwrite("warmup_start_lr", &amd::RunConfig::warmup_start_lr)
        .def_readwrite("alpha", &amd::RunConfig::alpha)
        .def_readwrite("beta", &amd::RunConfig::beta)
        .def_readwrite("upsilon", &amd::RunConfig::upsilon)
        .def_readwrite("gamma", &amd::RunConfig::gamma)
        .def_readwrite("pair_dump", &amd::RunConfig::pair_dump);

    m.def("gen_data", &amd::run_gen_data, py::arg("config"),
          py::call_guard<py::gil_scoped_release>());
    m.def("train_target", &amd::run_train_target, py::arg("config"),
          py::call_guard<py::gil_scoped_release>());
    m.def("train_interpreter", &amd::run_train_interpreter, py::arg("config"),
          py::call_guard<py::gil_scoped_release>());
    m.def(
        "explain",
        [](const amd::RunConfig& cfg, int query_record, int gallery_record) {
            py::gil_scoped_release release;
            return amd::run_explain(cfg, query_record, gallery_record).dump();
        },
        py::arg("config"), py::arg("query_record"), py::arg("gallery_record"));
    m.def(
        "evaluate",
        [](const amd::RunConfig& cfg, bool with_reweight) {
            py::gil_scoped_release release;
            return amd::run_evaluate(cfg, with_reweight).dump();
        },
        py::arg("config"), py::arg("with_reweight") = false);
    m.def("avg_attention", &amd::run_avg_attention, py::arg("config"),
          py::call_guard<py::gil_scoped_release>());
}
