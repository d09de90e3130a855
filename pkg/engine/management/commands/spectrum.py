import numpy as np

from engine.hodge import det_massive, det_prime, dirichlet_laplacian, laplacian
from engine.presets import make_connection, make_weights
from engine.serializers import DeterminantRowSerializer, SpectrumRowSerializer

from ._common import EngineCommand

NAN = float("nan")


class Command(EngineCommand):
    help = (
        "Eigenvalues of the Laplacian of a complex, or det' and massive "
        "determinants with --determinants. Complexes with a marked boundary "
        "use the Dirichlet Laplacian in degree 0."
    )
    preset_default = "cycle:3"

    def add_command_arguments(self, parser):
        parser.add_argument("--degree", type=int, default=0)
        parser.add_argument("--determinants", action="store_true")

    def operator(self, config):
        description, K, lengths, boundary = self.complex_source(config)
        rng = np.random.default_rng(config["seed"])
        if description is not None:
            W = (
                make_weights(K, config["weights"], lengths, rng)
                if config.get("weights") else description.weight_system(rng)
            )
            A = description.connection_on(K, rng)
        else:
            W = make_weights(K, config.get("weights", "diagonal-unit"), lengths, rng)
            A = make_connection(K, config.get("connection", "trivial"), config["rank"], config["field"], rng)
        if boundary is not None and config["degree"] == 0:
            return dirichlet_laplacian(K, boundary, W, A)
        return laplacian(K, W, A, config["degree"])

    def run(self, config):
        op = self.operator(config)
        name = config.get("preset") or config["complex"]
        if not config["determinants"]:
            self.row_serializer = SpectrumRowSerializer
            return [
                {"complex": name, "operator": op.tag, "degree": op.degree, "index": k, "eigenvalue": value}
                for k, value in enumerate(op.spectrum())
            ]
        self.row_serializer = DeterminantRowSerializer
        det = det_prime(op)
        rows = []
        for mass in self.masses(config):
            massive = det_massive(op, mass).log if mass > 0 else NAN
            rows.append({
                "complex": name,
                "operator": op.tag,
                "kernel_dim": det.kernel_dim,
                "log_det_prime": det.log,
                "mass": mass,
                "log_det_massive": massive,
            })
        return rows
