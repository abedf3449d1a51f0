"""
Generador de Reportes
Resumen de texto, digest JSON y reporte PDF con tablas de comprobaciones
y gráficos de decaimiento y densidad
"""

import os
import json
from datetime import datetime
from typing import Dict, List, Optional
from xml.sax.saxutils import escape

import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
import seaborn as sns
from reportlab.lib.pagesizes import A4
from reportlab.platypus import SimpleDocTemplate, Paragraph, Spacer, Image, Table, TableStyle, PageBreak
from reportlab.lib.styles import getSampleStyleSheet, ParagraphStyle
from reportlab.lib.colors import HexColor, black, white
from reportlab.lib.units import inch
from reportlab.lib.enums import TA_CENTER, TA_JUSTIFY
from PIL import Image as PILImage

from .equidist import ENVELOPE_BASE, RECTANGULAR_GAMMA

PASS_COLOR = '#2E7D32'
FAIL_COLOR = '#C62828'
ADVISORY_COLOR = '#F18F01'


class ReportGenerator:
    """
    Genera el resumen de texto, el digest JSON y el reporte PDF
    """

    def __init__(self, reports_dir: str = "output"):
        """
        Inicializa el generador de reportes

        Args:
            reports_dir: Directorio para guardar reportes
        """
        self.reports_dir = reports_dir
        self.ensure_directory_exists()
        self._temp_files_to_clean: List[str] = []

        self.styles = getSampleStyleSheet()
        self._setup_custom_styles()

        plt.style.use('seaborn-v0_8')
        sns.set_palette("husl")

    def ensure_directory_exists(self):
        """Asegura que el directorio de reportes existe"""
        if not os.path.exists(self.reports_dir):
            os.makedirs(self.reports_dir)

    def _setup_custom_styles(self):
        """Configura estilos personalizados para el reporte"""
        self.title_style = ParagraphStyle(
            'CustomTitle',
            parent=self.styles['Title'],
            fontSize=22,
            spaceAfter=24,
            textColor=HexColor('#2E86AB'),
            alignment=TA_CENTER
        )
        self.subtitle_style = ParagraphStyle(
            'CustomSubtitle',
            parent=self.styles['Heading2'],
            fontSize=14,
            spaceAfter=14,
            textColor=HexColor('#A23B72')
        )
        self.normal_style = ParagraphStyle(
            'CustomNormal',
            parent=self.styles['Normal'],
            fontSize=10,
            spaceAfter=10,
            alignment=TA_JUSTIFY
        )

    def generate_report(self, results: Dict, config, decay=None) -> Dict[str, str]:
        """
        Genera summary.txt, digest.json y report.pdf

        Args:
            results: RunResult por subcomando
            config: RunConfig usada
            decay: DecayResult del modo cuadrado (opcional)

        Returns:
            Rutas de los archivos generados
        """
        digest = self.build_digest(results, config)
        paths = {
            'digest': self._write(os.path.join(self.reports_dir, 'digest.json'),
                                  json.dumps(digest, indent=2, sort_keys=True, default=str) + "\n"),
            'summary': self._write(os.path.join(self.reports_dir, 'summary.txt'), self.render_summary(digest)),
        }
        filepath = os.path.join(self.reports_dir, 'report.pdf')
        doc = SimpleDocTemplate(filepath, pagesize=A4, topMargin=0.5 * inch)
        story = []
        self._add_cover_page(story, digest)
        self._add_checks_table(story, digest)
        self._add_charts(story, results, decay)
        self._add_technical_data(story, digest)
        doc.build(story)
        self._cleanup_temp_files()
        paths['pdf'] = filepath
        print(f"📄 Reporte generado: {filepath}")
        return paths

    @staticmethod
    def _write(path: str, text: str) -> str:
        with open(path, 'w', encoding='utf-8') as f:
            f.write(text)
        return path

    def build_digest(self, results: Dict, config) -> Dict:
        """Digest determinista (sin marcas de tiempo)"""
        checks, advisory, summaries = [], [], {}
        for name, result in results.items():
            if name == 'report':
                continue
            checks.extend(dict(c.record(), subcommand=name) for c in result.checks)
            advisory.extend(dict(c.record(), subcommand=name) for c in result.advisory)
            summaries[name] = result.summary
        return {
            'config_hash': config.config_hash(),
            'passed': all(c['passed'] for c in checks),
            'checks': checks,
            'advisory': advisory,
            'summaries': summaries,
            'rectangular_gamma': RECTANGULAR_GAMMA,
        }

    def render_summary(self, digest: Dict) -> str:
        """Resumen legible; la marca de tiempo solo aparece en la cabecera"""
        lines = [
            "Laboratorio espectral del toro con dos dispersores",
            f"Generado: {datetime.now().strftime('%d/%m/%Y %H:%M:%S')}",
            f"Config: {digest['config_hash']}",
            "",
            f"Resultado global: {'APROBADO' if digest['passed'] else 'FALLIDO'}",
            "",
            "Comprobaciones:",
        ]
        for check in digest['checks']:
            mark = "OK " if check['passed'] else "ERR"
            lines.append(f"  [{mark}] {check['subcommand']}/{check['name']}")
        if digest['advisory']:
            lines += ["", "Expectativas calibradas (informativas):"]
            for check in digest['advisory']:
                mark = "ok " if check['passed'] else "-- "
                lines.append(f"  [{mark}] {check['subcommand']}/{check['name']}")
        lines += ["", f"γ del modo rectangular (reportado, no derivado): 23/832 = {RECTANGULAR_GAMMA:.6f}", ""]
        return "\n".join(lines)

    def _add_cover_page(self, story: List, digest: Dict):
        """Añade la página de portada"""
        story.append(Paragraph("Reporte del Laboratorio Espectral", self.title_style))
        story.append(Spacer(1, 0.3 * inch))
        color = PASS_COLOR if digest['passed'] else FAIL_COLOR
        verdict = "APROBADO" if digest['passed'] else "FALLIDO"
        story.append(Paragraph(f"""
        <para align="center"><b><font size="18" color="{color}">Resultado: {verdict}</font></b><br/>
        <font size="11">{sum(c['passed'] for c in digest['checks'])} de {len(digest['checks'])} comprobaciones superadas</font>
        </para>""", self.normal_style))
        story.append(Spacer(1, 0.3 * inch))
        story.append(Paragraph(f"""
        <b>Fecha:</b> {datetime.now().strftime('%d/%m/%Y %H:%M:%S')}<br/>
        <b>Hash de configuración:</b> {digest['config_hash'][:16]}<br/>
        <b>γ (modo rectangular, reportado):</b> 23/832
        """, self.normal_style))
        story.append(PageBreak())

    def _add_checks_table(self, story: List, digest: Dict):
        """Tabla de comprobaciones y de expectativas calibradas"""
        story.append(Paragraph("Comprobaciones", self.title_style))
        rows = [['Subcomando', 'Comprobación', 'Estado']]
        colors = []
        for check in digest['checks'] + digest['advisory']:
            advisory = check in digest['advisory']
            state = ('informativa: ' if advisory else '') + ('sí' if check['passed'] else 'no')
            rows.append([check['subcommand'], check['name'], state])
            colors.append(ADVISORY_COLOR if advisory else (PASS_COLOR if check['passed'] else FAIL_COLOR))
        table = Table(rows, colWidths=[1.4 * inch, 2.8 * inch, 1.6 * inch])
        style = [
            ('BACKGROUND', (0, 0), (-1, 0), HexColor('#2E86AB')),
            ('TEXTCOLOR', (0, 0), (-1, 0), white),
            ('FONTNAME', (0, 0), (-1, 0), 'Helvetica-Bold'),
            ('ALIGN', (0, 0), (-1, -1), 'CENTER'),
            ('BACKGROUND', (0, 1), (-1, -1), HexColor('#F8F9FA')),
            ('GRID', (0, 0), (-1, -1), 1, black),
        ]
        style += [('TEXTCOLOR', (2, i + 1), (2, i + 1), HexColor(c)) for i, c in enumerate(colors)]
        table.setStyle(TableStyle(style))
        story.append(table)
        story.append(PageBreak())

    def _add_charts(self, story: List, results: Dict, decay):
        story.append(Paragraph("Visualizaciones", self.title_style))
        for chart_path in (self._create_decay_chart(decay), self._create_density_chart(results)):
            if chart_path and os.path.exists(chart_path):
                story.append(self._scaled_image(chart_path, 6 * inch))
                story.append(Spacer(1, 0.2 * inch))
                self._temp_files_to_clean.append(chart_path)
        story.append(PageBreak())

    @staticmethod
    def _scaled_image(path: str, width: float) -> Image:
        with PILImage.open(path) as img:
            w, h = img.size
        return Image(path, width=width, height=width * h / w)

    def _add_technical_data(self, story: List, digest: Dict):
        """Testigos de las comprobaciones"""
        story.append(Paragraph("Datos Técnicos", self.title_style))
        for check in digest['checks'] + digest['advisory']:
            story.append(Paragraph(f"{check['subcommand']} / {check['name']}", self.subtitle_style))
            for key, value in sorted(check['witness'].items()):
                if isinstance(value, float):
                    value = f"{value:.6g}"
                elif isinstance(value, list):
                    value = ", ".join(str(v) for v in value[:5])
                story.append(Paragraph(f"<b>{key.replace('_', ' ')}:</b> {escape(str(value))}", self.normal_style))

    def _create_decay_chart(self, decay) -> Optional[str]:
        """Desviación completa frente a λ en escala log-log con el ajuste"""
        if decay is None or decay.plot_data.empty:
            return None
        try:
            data = decay.plot_data
            fig, ax = plt.subplots(figsize=(8, 5))
            sns.scatterplot(x=data['log10_lambda'], y=data['log10_dev'], ax=ax, s=25)
            if decay.fit:
                xs = np.linspace(data['log10_lambda'].min(), data['log10_lambda'].max(), 50)
                ax.plot(xs, decay.fit['intercept'] + decay.fit['exponent'] * xs,
                        label=f"ajuste: pendiente {decay.fit['exponent']:.3f}")
                ax.plot(xs, decay.fit['intercept'] + ENVELOPE_BASE * (xs - xs[0]) + decay.fit['exponent'] * xs[0],
                        linestyle='--', label='pendiente −1/8')
                ax.legend()
            ax.set_xlabel('log10 λ')
            ax.set_ylabel('log10 |⟨a g, g⟩ − â(0)|')
            ax.set_title('Decaimiento de elementos de matriz sobre Λ∞', fontsize=13, fontweight='bold')
            chart_path = os.path.join(self.reports_dir, "temp_decay.png")
            plt.tight_layout()
            plt.savefig(chart_path, dpi=200, bbox_inches='tight')
            plt.close(fig)
            return chart_path
        except Exception as e:
            print(f"❌ Error creando gráfico de decaimiento: {str(e)}")
            return None

    def _create_density_chart(self, results: Dict) -> Optional[str]:
        """Densidad de Λ∞ por bloque diádico (cuadrado y rectangular)"""
        sieve = results.get('sieve')
        if sieve is None:
            return None
        try:
            fig, ax = plt.subplots(figsize=(8, 5))
            for key, label in (('density', 'a² = 1'), ('density_rect', 'rectangular')):
                path = sieve.artifacts.get(key)
                if not path or not os.path.exists(path):
                    continue
                frame = pd.read_csv(path)
                frame = frame[frame['count_base'] > 0]
                ax.plot(frame['block_lo'], frame['count_linf'] / frame['count_base'], marker='o', label=label)
            ax.set_xscale('log')
            ax.set_ylim(0, 1.05)
            ax.axhline(0.8, color='grey', linestyle=':')
            ax.set_xlabel('inicio del bloque')
            ax.set_ylabel('densidad de Λ∞ en Λ0')
            ax.legend()
            chart_path = os.path.join(self.reports_dir, "temp_density.png")
            plt.tight_layout()
            plt.savefig(chart_path, dpi=200, bbox_inches='tight')
            plt.close(fig)
            return chart_path
        except Exception as e:
            print(f"❌ Error creando gráfico de densidad: {str(e)}")
            return None

    def _cleanup_temp_files(self):
        """Limpia archivos temporales creados durante la generación del reporte"""
        for temp_file in self._temp_files_to_clean:
            try:
                if os.path.exists(temp_file):
                    os.remove(temp_file)
            except OSError as e:
                print(f"⚠️ Error eliminando archivo temporal {temp_file}: {e}")
        self._temp_files_to_clean = []
