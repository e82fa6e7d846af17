# Generated by Django 4.2.23 on 2026-10-19 09:12

from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='RunSummary',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('experiment_id', models.CharField(help_text="Preset id (1, 2, 3), 'config' for config-file runs, or a sweep tag", max_length=50)),
                ('parameters', models.TextField(help_text='Config text echo (key = value lines) the run was started with')),
                ('steps', models.IntegerField(default=0, help_text='Time steps taken')),
                ('picard_iterations', models.IntegerField(default=0, help_text='Picard iterations summed over all steps')),
                ('wall_time', models.FloatField(default=0.0, help_text='Wall-clock seconds')),
                ('stationary_metric', models.FloatField(blank=True, help_text='Last L2 relative change between time steps (empty if not finite)', null=True)),
                ('negativity_violations', models.IntegerField(default=0, help_text='Steps with a nodal value below -1e-12')),
                ('u1_min', models.FloatField(default=0.0)),
                ('u1_max', models.FloatField(default=0.0)),
                ('u1_mass', models.FloatField(default=0.0, help_text='Lumped integral of u1')),
                ('u2_min', models.FloatField(default=0.0)),
                ('u2_max', models.FloatField(default=0.0)),
                ('u2_mass', models.FloatField(default=0.0, help_text='Lumped integral of u2')),
                ('created_at', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'verbose_name': 'Run summary',
                'verbose_name_plural': 'Run summaries',
                'ordering': ['-created_at'],
            },
        ),
    ]
