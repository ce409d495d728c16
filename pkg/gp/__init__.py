"""
GP package - exact Gaussian-process regression and rolling forecasting
"""

from .kernels import (
    Hyper, SEKernel, RQKernel, SPKernel, SumKernel, ProductKernel, KernelExpr,
    kernel_eval, kernel_matrix, default_kernel, base_kernels, se_kernel, rq_kernel, sp_kernel,
    load_kernel, parse_kernel, dump_kernel, trainable,
)
from .model import Forecast, GpModel, gram, log_marginal_likelihood, fit, predict
from .forecasting import OnlineForecaster, ForecastStep, rolling_forecast, rmse, mean_rmse

__all__ = [
    'Hyper', 'SEKernel', 'RQKernel', 'SPKernel', 'SumKernel', 'ProductKernel', 'KernelExpr',
    'kernel_eval', 'kernel_matrix', 'default_kernel', 'base_kernels', 'se_kernel', 'rq_kernel',
    'sp_kernel', 'load_kernel', 'parse_kernel', 'dump_kernel', 'trainable',
    'Forecast', 'GpModel', 'gram', 'log_marginal_likelihood', 'fit', 'predict',
    'OnlineForecaster', 'ForecastStep', 'rolling_forecast', 'rmse', 'mean_rmse',
]
