"""k-Hessian 数値ツール Flaskアプリケーション"""

from flask import Flask, jsonify, request

from khessian import HessianError, make_params
from khessian.closed_forms import critical_solutions
from khessian.errors import DomainError, NumericError, RegimeError
from khessian.multiplicity import estimate_lambda_star, solve_all
from khessian.params import c_nk, mu_star, q_jl, q_star, validate_dimension

app = Flask(__name__)

ERROR_STATUS = {DomainError: 400, RegimeError: 422, NumericError: 500}


@app.errorhandler(HessianError)
def handle_hessian_error(exc: HessianError):
    """数値ライブラリの例外を JSON で返す"""
    status = next((code for cls, code in ERROR_STATUS.items() if isinstance(exc, cls)), 500)
    return jsonify(exc.to_dict()), status


def _number(data, name, cast=float, required=True):
    value = data.get(name)
    if value is None:
        if required:
            raise DomainError([f"missing parameter {name!r}"])
        return None
    try:
        return cast(value)
    except (TypeError, ValueError):
        raise DomainError([f"parameter {name!r} is not a number: {value!r}"]) from None


@app.route("/")
def index():
    """利用できるエンドポイントの一覧"""
    return jsonify({
        "endpoints": ["/api/exponents", "/api/regime", "/api/solve",
                      "/api/critical", "/api/lambda-star"],
    })


@app.route("/api/exponents", methods=["GET"])
def get_exponents():
    """臨界指数と定数"""
    n, k = validate_dimension(_number(request.args, "n", int), _number(request.args, "k", int))
    return jsonify({
        "n": n,
        "k": k,
        "c_nk": float(c_nk(n, k)),
        "q_star": q_star(n, k),
        "q_jl": None if q_jl(n, k) == float("inf") else q_jl(n, k),
        "mu_star": float(mu_star(n, k)),
    })


@app.route("/api/regime", methods=["GET"])
def get_regime():
    """相平面の型と派生定数"""
    params = make_params(_number(request.args, "n", int), _number(request.args, "k", int),
                         _number(request.args, "q"))
    constants = params.constants.to_dict()
    if constants["q_jl"] == float("inf"):
        constants["q_jl"] = None
    return jsonify({"params": params.to_dict(), "regime": params.regime.to_dict(),
                    "constants": constants})


def _solutions_payload(report: dict, solutions) -> dict:
    report["solutions"] = [
        {"index": s.index, "origin_value": s.origin_value, "s0": s.s0,
         "residuals": s.residuals}
        for s in solutions
    ]
    return report


@app.route("/api/solve", methods=["POST"])
def solve():
    """与えられた λ のすべての解"""
    data = request.get_json() or {}
    params = make_params(_number(data, "n", int), _number(data, "k", int),
                         _number(data, "q"), _number(data, "lambda"))
    report, solutions = solve_all(params, params.lam, s_max=_number(data, "s_max", required=False))
    return jsonify(_solutions_payload(report.to_dict(), solutions))


@app.route("/api/critical", methods=["POST"])
def critical():
    """q = q*(k) の閉形式解"""
    data = request.get_json() or {}
    n, k = validate_dimension(_number(data, "n", int), _number(data, "k", int))
    lam = _number(data, "lambda")
    solutions = critical_solutions(lam, n, k)
    return jsonify(_solutions_payload({"lambda_physical": lam, "count": len(solutions)},
                                      solutions))


@app.route("/api/lambda-star", methods=["POST"])
def lambda_star():
    """Picard 反復の二分探索による λ* の推定"""
    data = request.get_json() or {}
    params = make_params(_number(data, "n", int), _number(data, "k", int), _number(data, "q"))
    return jsonify(estimate_lambda_star(params, _number(data, "rtol", required=False)).to_dict())


if __name__ == "__main__":
    app.run(debug=True, host="0.0.0.0", port=5000)
