"""ARIMA forecasting with a parallel AIC grid search and benchmark harness."""

__version__ = "0.1.0"
