"""Operator entry point.

Runs the server, drives enrollment and login flows end to end with simulated
devices, executes the attack scenarios, and launches benchmarks. Commands
either target a running server (--url) or spin up an embedded loopback server
configured from the config file / METASECURE_* environment overrides.
"""

from __future__ import annotations

import contextlib
import json
import time
from pathlib import Path
from typing import Iterator, Optional

import click
import numpy as np
import uvicorn

from .authenticator import AuthenticatorDevice, DeviceKind
from .bench import (
    calibrate_password_cost,
    comparison_csv,
    emit_report,
    render_comparison_table,
    render_trial_table,
    time_face_auth,
    time_fido_auth,
    time_password_auth,
    trial_table_csv,
)
from .client import MetasecureClient
from .config import AppConfig, load_config
from .devicevault import DeviceVault
from .errors import MetasecureError, TransportError
from .face_identity import (
    evaluate_pad,
    load_labeled_dataset,
    planted_pad_dataset,
    render_confusion_report,
    save_labeled_dataset,
)
from .httpapi import EmbeddedServer, create_app
from .scenarios import SCENARIOS, run_scenario
from .service import MetasecureService


def _build_service(cfg: AppConfig, ephemeral: bool = False) -> MetasecureService:
    return MetasecureService.create(
        rp_id=cfg.rp_id,
        challenge_ttl_ms=cfg.challenge_ttl_ms,
        session_ttl_ms=cfg.session_ttl_ms,
        token_ttl_ms=cfg.token_ttl_ms,
        audit_log_path=None if ephemeral else cfg.audit_log,
        state_file=None if ephemeral else cfg.state_file,
        face_file=None if ephemeral else cfg.face_file,
    )


@contextlib.contextmanager
def _client_for(
    cfg: AppConfig, url: Optional[str], ephemeral: bool = False
) -> Iterator[MetasecureClient]:
    """A client against --url, or against a one-shot embedded loopback server."""
    if url:
        client = MetasecureClient(url, admin_token=cfg.admin_token)
        try:
            client.healthz()
        except TransportError as exc:
            client.close()
            raise click.ClickException(str(exc))
        try:
            yield client
        finally:
            client.close()
        return
    service = _build_service(cfg, ephemeral=ephemeral)
    embedded = EmbeddedServer(create_app(service, admin_token=cfg.admin_token), host=cfg.host)
    base_url = embedded.start()
    client = MetasecureClient(base_url, admin_token=cfg.admin_token)
    try:
        yield client
    finally:
        client.close()
        service.persist()
        embedded.stop()


def _vault_for(cfg: AppConfig, vault: Optional[str], vault_secret: Optional[str]) -> DeviceVault:
    path = vault or cfg.vault_file
    secret = vault_secret or cfg.vault_secret
    if not path or not secret:
        raise click.ClickException(
            "device persistence needs a vault: pass --vault/--vault-secret or set "
            "vault_file/vault_secret in the config (devices are in-memory only otherwise)"
        )
    return DeviceVault(path, secret)


@click.group()
@click.option(
    "--config", "-c", "config_path", type=click.Path(exists=True, dir_okay=False), default=None
)
@click.pass_context
def main(ctx: click.Context, config_path: Optional[str]) -> None:
    """Passwordless triple-layer authentication toolkit."""
    try:
        ctx.obj = load_config(config_path)
    except (ValueError, OSError) as exc:
        raise click.ClickException(f"bad config: {exc}")


@main.command()
@click.option("--host", default=None, help="Bind host (default from config).")
@click.option("--port", type=int, default=None, help="Bind port (default from config).")
@click.option(
    "--console-dir",
    type=click.Path(exists=True, file_okay=False),
    default=None,
    help="Serve the approval console static files at /console.",
)
@click.pass_obj
def serve(cfg: AppConfig, host: Optional[str], port: Optional[int], console_dir: Optional[str]) -> None:
    """Run the authentication server (blocks)."""
    service = _build_service(cfg)
    app = create_app(service, admin_token=cfg.admin_token, console_dir=console_dir)
    bind_host = host or cfg.host
    bind_port = port if port is not None else cfg.port
    click.echo(f"rp_id={cfg.rp_id} http://{bind_host}:{bind_port}")
    try:
        uvicorn.run(app, host=bind_host, port=bind_port, log_level="info")
    finally:
        service.persist()


@main.command("enroll-user")
@click.argument("email")
@click.argument("display_name")
@click.option("--user-id", default=None)
@click.option("--url", default=None, help="Target a running server instead of embedding one.")
@click.pass_obj
def enroll_user(cfg: AppConfig, email: str, display_name: str, user_id: Optional[str], url: Optional[str]) -> None:
    """Register an identity. Display names are immutable afterwards."""
    with _client_for(cfg, url) as client:
        user = client.register_user(email, display_name, user_id)
    click.echo(json.dumps(user))


@main.command("enroll-device")
@click.argument("user_id")
@click.argument("kind", type=click.Choice([k.value for k in DeviceKind]))
@click.option("--url", default=None)
@click.option("--vault", default=None, help="Encrypted vault file for device state.")
@click.option("--vault-secret", default=None)
@click.pass_obj
def enroll_device(
    cfg: AppConfig, user_id: str, kind: str, url: Optional[str],
    vault: Optional[str], vault_secret: Optional[str],
) -> None:
    """Create a simulated authenticator and run the registration ceremony."""
    store = _vault_for(cfg, vault, vault_secret)
    device = AuthenticatorDevice(DeviceKind(kind))
    with _client_for(cfg, url) as client:
        challenge = client.begin_registration(user_id)
        attestation = device.make_credential(challenge, challenge.rp_id, user_id)
        credential = client.finish_registration(attestation, challenge.nonce)
    store.add_device(device)
    store.save()
    click.echo(json.dumps({"device_id": device.device_id, **credential}))


@main.command("enroll-face")
@click.argument("user_id")
@click.option("--seed", type=int, default=None, help="Fix the synthetic face embedding.")
@click.option("--url", default=None)
@click.option("--vault", default=None)
@click.option("--vault-secret", default=None)
@click.pass_obj
def enroll_face(
    cfg: AppConfig, user_id: str, seed: Optional[int], url: Optional[str],
    vault: Optional[str], vault_secret: Optional[str],
) -> None:
    """Enroll a synthetic face embedding; the probe copy is kept in the vault."""
    store = _vault_for(cfg, vault, vault_secret)
    rng = np.random.default_rng(seed)
    vector = rng.normal(size=128)
    with _client_for(cfg, url) as client:
        client.enroll_face(user_id, vector)
    store.faces[user_id] = [float(v) for v in vector]
    store.save()
    click.echo(json.dumps({"user_id": user_id, "face_enrolled": True}))


def _auto_approve(client: MetasecureClient, store: DeviceVault, user_id: str, session_id: str) -> None:
    from .scenarios import LIVE_FEATURES

    phone = store.device_for_kind(DeviceKind.SMARTPHONE, user_id)
    key = store.device_for_kind(DeviceKind.SECURITY_KEY, user_id)
    face = store.faces.get(user_id)
    if phone is None or key is None or face is None:
        raise click.ClickException(
            "vault lacks a smartphone, security key, or face for this user; "
            "run enroll-device/enroll-face first"
        )
    for step, device, acknowledged in (
        ("device_attestation", phone, False),
        ("security_key", key, True),
    ):
        challenge = client.begin_authentication(user_id)
        assertion = device.get_assertion(
            challenge, challenge.rp_id, store.credential_for(device, user_id)
        )
        result = client.advance_assertion(
            session_id, step, assertion, challenge.nonce, device_acknowledged=acknowledged
        )
        if not result["ok"]:
            raise click.ClickException(f"step {step} failed: {result['failure']} {result['detail']}")
        click.echo(f"step {step}: ok")
    result = client.advance_face(session_id, face, LIVE_FEATURES)
    if not result["ok"]:
        raise click.ClickException(f"face step failed: {result['failure']} {result['detail']}")
    click.echo("step face: ok")


@main.command()
@click.argument("user_id")
@click.option("--service-provider", default="vrworld.example")
@click.option("--origin", default="cli-origin-device")
@click.option("--auto", is_flag=True, help="Approve all three steps with vault devices.")
@click.option("--timeout", type=float, default=120.0, help="Seconds to poll when not --auto.")
@click.option("--url", default=None)
@click.option("--vault", default=None)
@click.option("--vault-secret", default=None)
@click.pass_obj
def login(
    cfg: AppConfig, user_id: str, service_provider: str, origin: str, auto: bool,
    timeout: float, url: Optional[str], vault: Optional[str], vault_secret: Optional[str],
) -> None:
    """Request a login and wait for (or auto-run) the three approval steps."""
    with _client_for(cfg, url) as client:
        session = client.request_login(user_id, service_provider, origin)
        session_id = session["session_id"]
        click.echo(f"session {session_id} pending approval")
        if auto:
            store = _vault_for(cfg, vault, vault_secret)
            _auto_approve(client, store, user_id, session_id)
            store.save()  # persists advanced signature counters
        deadline = time.monotonic() + timeout
        while True:
            status = client.status(session_id)
            if status["state"] in ("complete", "denied", "expired"):
                break
            if time.monotonic() > deadline:
                raise click.ClickException(f"timed out waiting for session {session_id}")
            time.sleep(0.5)
    click.echo(json.dumps(status))
    if status["state"] != "complete":
        raise SystemExit(1)


@main.command()
@click.argument("name")
@click.option("--seed", type=int, default=None)
@click.option("--url", default=None)
@click.option("--verbose", "-v", is_flag=True, help="Print per-scenario step logs.")
@click.pass_obj
def scenario(cfg: AppConfig, name: str, seed: Optional[int], url: Optional[str], verbose: bool) -> None:
    """Run one named attack/happy-path scenario, or `all`.

    Exits nonzero iff any scenario's observed outcome differs from expected.
    """
    names = list(SCENARIOS) if name == "all" else [name]
    failures = 0
    with _client_for(cfg, url, ephemeral=True) as client:
        for scenario_name in names:
            try:
                result = run_scenario(scenario_name, client, seed)
            except MetasecureError as exc:
                raise click.ClickException(str(exc))
            verdict = "PASS" if result.passed else "FAIL"
            click.echo(
                f"[{verdict}] {result.name}: expected={result.expected} observed={result.observed}"
            )
            if verbose:
                for step in result.steps:
                    click.echo(f"    - {step}")
            failures += 0 if result.passed else 1
    if failures:
        raise SystemExit(1)


@main.command()
@click.option("--trials", type=int, default=5, show_default=True)
@click.option("--target-password-ms", type=float, default=1056.4, show_default=True)
@click.option("--output", type=click.Choice(["text", "delimited"]), default="text", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option(
    "--outdir",
    type=click.Path(file_okay=False),
    default=None,
    help="Also write CSV tables and matplotlib figures here.",
)
@click.pass_obj
def bench(
    cfg: AppConfig, trials: int, target_password_ms: float, output: str,
    seed: int, outdir: Optional[str],
) -> None:
    """Benchmark password, face, and passwordless authentication."""
    try:
        iterations = calibrate_password_cost(target_password_ms)
        click.echo(f"# password check calibrated to {iterations} hash iterations", err=True)
        password_row = time_password_auth(trials, iterations)
        face_row = time_face_auth(trials, seed)
        fido_row = time_fido_auth(trials)
    except MetasecureError as exc:
        raise click.ClickException(str(exc))
    report = emit_report([password_row, face_row, fido_row])
    if output == "text":
        click.echo(render_trial_table(fido_row))
        click.echo(render_comparison_table(report))
    else:
        click.echo(trial_table_csv(fido_row))
        click.echo(comparison_csv(report))
    if outdir:
        from .figures import save_comparison_figure, save_trials_figure

        directory = Path(outdir)
        directory.mkdir(parents=True, exist_ok=True)
        (directory / "fido_trials.csv").write_text(trial_table_csv(fido_row), encoding="utf-8")
        (directory / "comparison.csv").write_text(comparison_csv(report), encoding="utf-8")
        (directory / "fido_trials.txt").write_text(render_trial_table(fido_row), encoding="utf-8")
        (directory / "comparison.txt").write_text(render_comparison_table(report), encoding="utf-8")
        save_trials_figure(fido_row, directory / "fido_trials.png")
        save_comparison_figure(report, directory / "comparison.png")
        click.echo(f"# wrote tables and figures to {directory}", err=True)


@main.command("pad-eval")
@click.argument("dataset", type=click.Path(exists=True, dir_okay=False), required=False)
@click.option("--synthetic", type=int, default=None, help="Generate N synthetic samples instead.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--outdir", type=click.Path(file_okay=False), default=None)
def pad_eval(dataset: Optional[str], synthetic: Optional[int], seed: int, outdir: Optional[str]) -> None:
    """Evaluate the PAD classifier on a labeled dataset; render the confusion table."""
    if dataset is None and synthetic is None:
        raise click.ClickException("give a dataset file or --synthetic N")
    try:
        if dataset is not None:
            samples = load_labeled_dataset(dataset)
        else:
            rng = np.random.default_rng(seed)
            samples = planted_pad_dataset(rng, synthetic // 2, synthetic - synthetic // 2)
        matrix = evaluate_pad(samples)
    except MetasecureError as exc:
        raise click.ClickException(str(exc))
    click.echo(render_confusion_report(matrix))
    if outdir:
        from .figures import save_confusion_figure

        directory = Path(outdir)
        directory.mkdir(parents=True, exist_ok=True)
        (directory / "confusion.json").write_text(
            json.dumps(matrix.to_dict(), indent=2), encoding="utf-8"
        )
        (directory / "confusion.txt").write_text(render_confusion_report(matrix), encoding="utf-8")
        save_confusion_figure(matrix, directory / "confusion.png")
        if dataset is None:
            save_labeled_dataset(samples, directory / "synthetic_dataset.csv")
        click.echo(f"# wrote confusion report to {directory}", err=True)


@main.group()
def admin() -> None:
    """Credential lifecycle management (bearer-token protected)."""


@admin.command("list")
@click.argument("user_id")
@click.option("--url", default=None)
@click.option("--admin-token", default=None)
@click.pass_obj
def admin_list(cfg: AppConfig, user_id: str, url: Optional[str], admin_token: Optional[str]) -> None:
    if admin_token:
        cfg.admin_token = admin_token
    with _client_for(cfg, url) as client:
        credentials = client.admin_list(user_id)
    click.echo(json.dumps(credentials, indent=2))


@admin.command("revoke")
@click.argument("credential_id")
@click.option("--url", default=None)
@click.option("--admin-token", default=None)
@click.pass_obj
def admin_revoke(cfg: AppConfig, credential_id: str, url: Optional[str], admin_token: Optional[str]) -> None:
    if admin_token:
        cfg.admin_token = admin_token
    with _client_for(cfg, url) as client:
        credential = client.admin_revoke(credential_id)
    click.echo(json.dumps(credential))


@admin.command("wipe")
@click.argument("device_id")
@click.option("--url", default=None)
@click.option("--admin-token", default=None)
@click.pass_obj
def admin_wipe(cfg: AppConfig, device_id: str, url: Optional[str], admin_token: Optional[str]) -> None:
    if admin_token:
        cfg.admin_token = admin_token
    with _client_for(cfg, url) as client:
        result = client.admin_wipe(device_id)
    click.echo(json.dumps(result))


if __name__ == "__main__":
    main()
