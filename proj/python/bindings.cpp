// Python bindings. Fields cross the boundary as square numpy arrays
// (complex128 for fields, float64/float32 for images), indexed [y, x].

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "macrofp/dataset.hpp"
#include "macrofp/harness.hpp"
#include "macrofp/version.hpp"

namespace py = pybind11;
using namespace macrofp;
using namespace pybind11::literals;

namespace {

using cd = std::complex<double>;
using ComplexArray = py::array_t<cd, py::array::c_style | py::array::forcecast>;
using RealArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::size_t square_side(const py::buffer_info& info)
{
    if (info.ndim != 2 || info.shape[0] != info.shape[1])
        throw DimensionError("expected a square 2D array");
    return static_cast<std::size_t>(info.shape[0]);
}

ComplexField field_from(const ComplexArray& a, Domain domain)
{
    const auto info = a.request();
    const std::size_t n = square_side(info);
    const auto* p = static_cast<const cd*>(info.ptr);
    return ComplexField(n, n, std::vector<cd>(p, p + n * n), domain);
}

RealImage image_from(const RealArray& a)
{
    const auto info = a.request();
    if (info.ndim != 2)
        throw DimensionError("expected a 2D array");
    const auto h = static_cast<std::size_t>(info.shape[0]);
    const auto w = static_cast<std::size_t>(info.shape[1]);
    const auto* p = static_cast<const double*>(info.ptr);
    return RealImage(w, h, std::vector<double>(p, p + w * h));
}

py::array_t<cd> to_array(const ComplexField& f)
{
    py::array_t<cd> out({f.height(), f.width()});
    std::copy(f.data().begin(), f.data().end(), out.mutable_data());
    return out;
}

template <class T>
py::array_t<T> to_array(const Image<T>& img)
{
    py::array_t<T> out({img.height(), img.width()});
    std::copy(img.pixels().begin(), img.pixels().end(), out.mutable_data());
    return out;
}

py::list images_list(const CaptureSet& set)
{
    py::list out;
    for (const auto& img : set.images)
        out.append(to_array(img));
    return out;
}

CaptureSet set_from(const std::vector<RealArray>& images, const std::vector<ApertureSpec>& apertures,
                    std::optional<MultiplexGroups> groups)
{
    CaptureSet set;
    for (const auto& a : images)
        set.images.push_back(to_float(image_from(a)));
    set.apertures = apertures;
    set.multiplex_groups = std::move(groups);
    return set;
}

py::dict report_dict(const ReconReport& r)
{
    return py::dict("psi_hat"_a = to_array(r.psi_hat), "recovered"_a = to_array(r.recovered_image),
                    "residual_history"_a = r.residual_history, "iterations"_a = r.iterations_run,
                    "converged"_a = r.converged, "tau"_a = r.tau);
}

py::dict chart_dict(const ObjectField& obj)
{
    py::list groups;
    for (const auto& g : obj.groups)
        groups.append(py::dict("bar_width"_a = g.bar_width, "x0"_a = g.x0, "y0"_a = g.y0, "width"_a = g.width,
                               "height"_a = g.height, "white"_a = g.white, "black"_a = g.black));
    return py::dict("field"_a = to_array(obj.field), "groups"_a = groups);
}

std::vector<BarGroup> groups_from(const py::list& groups)
{
    std::vector<BarGroup> out;
    for (const auto& item : groups) {
        const auto d = item.cast<py::dict>();
        BarGroup g;
        g.bar_width = d["bar_width"].cast<int>();
        g.white = d["white"].cast<std::vector<std::size_t>>();
        g.black = d["black"].cast<std::vector<std::size_t>>();
        out.push_back(std::move(g));
    }
    return out;
}

} // namespace

PYBIND11_MODULE(_macrofp, m)
{
    m.doc() = "Fourier ptychography simulation and reconstruction";
    m.attr("__version__") = version_string;

    auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<DimensionError>(m, "DimensionError", error);
    py::register_exception<GeometryError>(m, "GeometryError", error);
    py::register_exception<LayoutError>(m, "LayoutError", error);
    py::register_exception<InputError>(m, "InputError", error);
    py::register_exception<NumericalError>(m, "NumericalError", error);
    py::register_exception<ConfigError>(m, "ConfigError", error);
    auto io = py::register_exception<IoError>(m, "IoError", error);
    py::register_exception<ChecksumError>(m, "ChecksumError", io);

    py::class_<OpticalGeometry>(m, "OpticalGeometry")
        .def(py::init<>())
        .def_readwrite("wavelength", &OpticalGeometry::wavelength)
        .def_readwrite("object_distance", &OpticalGeometry::object_distance)
        .def_readwrite("focal_length", &OpticalGeometry::focal_length)
        .def_readwrite("aperture_diameter", &OpticalGeometry::aperture_diameter)
        .def_readwrite("object_extent", &OpticalGeometry::object_extent)
        .def_readwrite("pixel_pitch", &OpticalGeometry::pixel_pitch)
        .def_readwrite("grid_size", &OpticalGeometry::grid_size)
        .def_static("paper_chart", &OpticalGeometry::paper_chart)
        .def_static("desk_chart", &OpticalGeometry::desk_chart)
        .def("validate", &OpticalGeometry::validate);
    m.def("aperture_samples", &aperture_samples, "geometry"_a);

    py::class_<ApertureSpec>(m, "ApertureSpec")
        .def(py::init<double, double, double>(), "cx"_a, "cy"_a, "diameter"_a)
        .def_readwrite("cx", &ApertureSpec::cx)
        .def_readwrite("cy", &ApertureSpec::cy)
        .def_readwrite("diameter", &ApertureSpec::diameter)
        .def("__repr__", [](const ApertureSpec& a) {
            return "ApertureSpec(" + std::to_string(a.cx) + ", " + std::to_string(a.cy) + ", " +
                   std::to_string(a.diameter) + ")";
        });

    m.def("forward_transform", [](const ComplexArray& a) { return to_array(forward_transform(field_from(a, Domain::object_plane))); },
          "field"_a, "Centered unitary 2D DFT.");
    m.def("inverse_transform", [](const ComplexArray& a) { return to_array(inverse_transform(field_from(a, Domain::fourier_plane))); },
          "spectrum"_a);
    m.def("aperture_mask", [](const ApertureSpec& ap, std::size_t n) { return to_array(aperture_mask(ap, n)); },
          "aperture"_a, "n"_a);

    m.def(
        "plan_grid",
        [](double overlap_pct, int count, double diameter, std::size_t n) {
            const auto g = plan_grid(overlap_pct, count, diameter, n);
            return py::dict("apertures"_a = g.apertures, "step"_a = g.step, "sar"_a = g.sar(),
                            "overlap"_a = g.overlap(), "center_index"_a = g.center_index());
        },
        "overlap_pct"_a, "count"_a, "diameter"_a, "n"_a);
    m.def("count_for_sar", &count_for_sar, "overlap_pct"_a, "sar_target"_a);

    m.def(
        "make_chart",
        [](std::size_t n, std::vector<int> widths) {
            ResolutionChartSpec spec;
            spec.grid_size = n;
            spec.group_widths = std::move(widths);
            return chart_dict(make_chart(spec));
        },
        "n"_a, "widths"_a, "Bar chart; returns {'field', 'groups'}.");

    m.def(
        "capture",
        [](const ComplexArray& object, const std::vector<ApertureSpec>& apertures) {
            ObjectField obj;
            obj.field = field_from(object, Domain::object_plane);
            return images_list(capture(obj, apertures));
        },
        "object"_a, "apertures"_a, "Noiseless sensor intensities, one float32 image per aperture.");
    m.def(
        "add_noise",
        [](const std::vector<RealArray>& images, double snr_db, std::uint64_t seed) {
            return images_list(add_noise(set_from(images, {}, std::nullopt), snr_db, seed));
        },
        "images"_a, "snr_db"_a, "seed"_a);

    m.def(
        "reconstruct",
        [](const std::vector<RealArray>& images, const std::vector<ApertureSpec>& apertures, int max_iters,
           double rel_tol, std::optional<double> tau, std::optional<MultiplexGroups> groups) {
            const CaptureSet set = set_from(images, apertures, std::move(groups));
            ReconConfig cfg;
            cfg.max_iters = max_iters;
            cfg.rel_tol = rel_tol;
            cfg.tau = tau;
            cfg.mode = set.multiplexed() ? ReconMode::multiplexed : ReconMode::sequential;
            ReconReport report;
            {
                py::gil_scoped_release release;
                report = reconstruct(set, cfg);
            }
            return report_dict(report);
        },
        "images"_a, "apertures"_a, "max_iters"_a = 1000, "rel_tol"_a = 1e-5, "tau"_a = py::none(),
        "multiplex_groups"_a = py::none());

    m.def(
        "contrast",
        [](const RealArray& intensity, const std::vector<std::size_t>& white, const std::vector<std::size_t>& black) {
            return contrast(image_from(intensity), white, black);
        },
        "intensity"_a, "white"_a, "black"_a);
    m.def(
        "mtf20_limit",
        [](const RealArray& intensity, const py::list& groups) {
            return mtf20_limit(group_contrasts(image_from(intensity), groups_from(groups)));
        },
        "intensity"_a, "groups"_a, "Finest resolved bar width, or None.");
    m.def(
        "intensity_rmse",
        [](const RealArray& recovered, const RealArray& truth) {
            const auto r = intensity_rmse(image_from(recovered), image_from(truth));
            return py::make_tuple(r.rmse, r.alpha);
        },
        "recovered"_a, "truth"_a, "Returns (rmse, alpha).");
    m.def(
        "diffraction_calc",
        [](const OpticalGeometry& g) {
            const auto b = diffraction_calc(g);
            return py::dict("object_blur"_a = b.object_blur, "rayleigh_radius"_a = b.rayleigh_radius,
                            "sensor_spot"_a = b.sensor_spot);
        },
        "geometry"_a);

    m.def("describe_dataset", &describe_dataset, "dir"_a);
    m.def(
        "load_capture_set",
        [](const std::filesystem::path& dir) {
            const auto set = load_capture_set(dir);
            return py::dict("images"_a = images_list(set), "apertures"_a = set.apertures,
                            "multiplex_groups"_a = set.multiplex_groups, "snr_db"_a = set.snr_db);
        },
        "dir"_a);

    m.def(
        "run_config",
        [](const std::filesystem::path& path, bool write_artifacts) {
            const auto config = load_config(path);
            ExperimentResult result;
            {
                py::gil_scoped_release release;
                result = run_experiment(config, write_artifacts);
            }
            py::list runs;
            for (const auto& r : result.runs)
                runs.append(py::dict("experiment_id"_a = r.experiment_id, "ok"_a = r.ok, "rmse"_a = r.rmse,
                                     "mtf20"_a = r.mtf20, "center_mtf20"_a = r.center_mtf20, "sar"_a = r.grid.sar,
                                     "iterations"_a = r.iterations));
            return runs;
        },
        "path"_a, "write_artifacts"_a = true, "Runs an experiment config file; returns one dict per run.");
}
