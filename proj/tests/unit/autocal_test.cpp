#include <cmath>

#include <gtest/gtest.h>

#include "freeflow/autocal/calibration.hpp"

using namespace ff;
using namespace ff::autocal;

namespace {

ThermalGrid uniform(float value) { return ThermalGrid(336, 252, value); }

// Black body at the reference with an additive sensor drift, sampled at 8 fps.
ThermalSource driftingPlant(double reference, std::function<double(double)> drift) {
    return [=](int i) {
        double t = i / 8.0;
        return std::pair{t, uniform(static_cast<float>(reference + drift(t)))};
    };
}

}  // namespace

TEST(CalibConfig, Validation) {
    CalibConfig{}.validate();
    CalibConfig c;
    c.k_p = 2.0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c.k_p = 0.0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = {};
    c.settling_period = 0.0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = {};
    c.error_threshold = -0.1;
    EXPECT_THROW(CalibState{c}, std::invalid_argument);
}

TEST(Monitor, UniformRoi) {
    CalibState st;
    EXPECT_FLOAT_EQ(monitorBlackBody(uniform(35.0f), st), 35.0);
    st.correction_offset = 1.5;
    EXPECT_FLOAT_EQ(monitorBlackBody(uniform(35.0f), st), 36.5);
}

TEST(Monitor, MeanOfRoiPixels) {
    CalibConfig c;
    c.roi = BBox(10, 20, 2, 1);
    CalibState st(c);
    ThermalGrid g = uniform(20.0f);
    g(10, 20) = 34.8f;
    g(11, 20) = 35.2f;
    EXPECT_NEAR(monitorBlackBody(g, st), 35.0, 1e-6);
}

TEST(Monitor, RoiOutsideFrame) {
    CalibConfig c;
    c.roi = BBox(330, 8, 16, 16);
    EXPECT_THROW(monitorBlackBody(uniform(35.0f), CalibState(c)), std::out_of_range);
}

TEST(Controller, ZeroErrorNoChange) {
    CalibState st;
    EXPECT_FALSE(controllerStep(st, 35.0, 0.0));
    EXPECT_EQ(st.correction_offset, 0.0);
    EXPECT_FALSE(st.last_signal_time.has_value());
}

TEST(Controller, DeadbandSuppresses) {
    CalibState st;
    EXPECT_FALSE(controllerStep(st, 35.3, 0.0));
    EXPECT_FALSE(controllerStep(st, 34.7, 1.0));
    EXPECT_EQ(st.correction_offset, 0.0);
}

TEST(Controller, GeometricDecayFromFiveDegrees) {
    // plant gain 1: reading = reference + drift + offset
    CalibState st;
    const double drift = 5.0;
    int signals = 0;
    for (int n = 0; n < 10; ++n) {
        double measured = 35.0 + drift + st.correction_offset;
        double error = measured - 35.0;
        EXPECT_NEAR(error, 5.0 * std::pow(0.5, signals), 1e-12);
        if (std::abs(error) <= 0.3) break;
        EXPECT_TRUE(controllerStep(st, measured, 5.0 * n));
        ++signals;
    }
    EXPECT_EQ(signals, 5);
}

TEST(Controller, SettlingSuppressesEarlySignal) {
    CalibState st;
    EXPECT_TRUE(controllerStep(st, 40.0, 10.0));
    double after = st.correction_offset;
    EXPECT_DOUBLE_EQ(after, -2.5);
    EXPECT_FALSE(controllerStep(st, 37.5, 12.0));
    EXPECT_EQ(st.correction_offset, after);
    EXPECT_EQ(*st.last_signal_time, 10.0);
    EXPECT_TRUE(controllerStep(st, 37.5, 15.0));
    EXPECT_DOUBLE_EQ(st.correction_offset, -3.75);
}

TEST(Loop, DriftStepConvergesWithinFiveSettlingPeriods) {
    CalibState st;
    auto trace = runCalibrationLoop(8 * 60, driftingPlant(35.0, [](double t) { return t >= 10.0 ? 5.0 : 0.0; }), st);
    ASSERT_EQ(trace.size(), 480u);
    for (const auto& s : trace) {
        if (s.time < 10.0) {
            EXPECT_FALSE(s.signal);
        }
        if (s.time >= 10.0 + 5 * 5.0) {
            EXPECT_LT(std::abs(s.error), 0.3) << s.time;
        }
    }
    EXPECT_NEAR(st.correction_offset, -5.0, 0.3);
}

TEST(Loop, ZeroDriftNoSignals) {
    CalibState st;
    auto trace = runCalibrationLoop(200, driftingPlant(35.0, [](double) { return 0.0; }), st);
    for (const auto& s : trace) EXPECT_FALSE(s.signal);
    EXPECT_EQ(st.correction_offset, 0.0);
}

TEST(Loop, NegativeStepSettlesAtOpposingOffset) {
    CalibState st;
    runCalibrationLoop(8 * 40, driftingPlant(35.0, [](double t) { return t >= 3.0 ? -2.0 : 0.0; }), st);
    EXPECT_NEAR(st.correction_offset, 2.0, 0.3);
}

TEST(Loop, ErrorShrinksAcrossSignalsAndSignalsArePaced) {
    for (double k_p : {0.3, 0.5, 1.0, 1.5, 1.9}) {
        CalibConfig c;
        c.k_p = k_p;
        c.settling_period = 2.0;
        CalibState st(c);
        auto trace = runCalibrationLoop(8 * 120, driftingPlant(35.0, [](double t) { return t >= 1.0 ? 4.0 : 0.0; }), st);
        std::optional<double> last_time, last_error;
        for (const auto& s : trace) {
            if (!s.signal) continue;
            if (last_time) {
                EXPECT_GE(s.time - *last_time, c.settling_period - 1e-9);
            }
            if (last_error) {
                EXPECT_LT(std::abs(s.error), std::abs(*last_error)) << "k_p " << k_p;
            }
            last_time = s.time;
            last_error = s.error;
        }
        EXPECT_LE(std::abs(trace.back().error), c.error_threshold) << "k_p " << k_p;
    }
}

TEST(Loop, TimestampsMustIncrease) {
    CalibState st;
    ThermalSource stuck = [](int) { return std::pair{1.0, uniform(35.0f)}; };
    EXPECT_THROW(runCalibrationLoop(3, stuck, st), std::invalid_argument);
}
